//! The structural claims about happiness, checked by exact enumeration on
//! random MDPs, as `hedonia verify` does.
//!
//!     cargo run --release -p hedonia --example propositions

use hedonia::props::{verify_prop1, verify_prop2, verify_prop3, Report};

fn show(r: &Report) {
    println!(
        "{:<70} {}  max deviation {:.1e}",
        r.claim,
        if r.pass { "pass" } else { "FAIL" },
        r.max_deviation
    );
    if let Some(mc) = &r.monte_carlo {
        println!("{:>70}   Monte Carlo mean {:+.2e} ± {:.1e}", "", mc.mean, mc.std_error);
    }
}

fn main() -> hedonia::Result<()> {
    let seed = 1;
    show(&verify_prop1(100, seed)?);
    show(&verify_prop2(100, seed, 100_000)?);
    show(&verify_prop3(100, 10, seed)?);
    Ok(())
}
