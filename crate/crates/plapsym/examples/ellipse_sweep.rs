//! Runs the full sweep pipeline over a family of area-preserving ellipses:
//! for each eccentricity it solves, assembles the deficit report, and fits
//! the stability trend log L1 ~ theta log eps. Writes sweep.csv, sweep.json
//! into a scratch directory and prints the digest.

use plapsym::pipeline::{run_report, run_sweep};

fn main() {
    let out = std::env::temp_dir().join("plapsym_ellipse_sweep");
    let base = format!(
        "family=disk\nr=1\np=2\nh=0.08\nt_levels=48\noutput_dir={}\n",
        out.display()
    );
    let axis = "family=ellipse\na=1.02\nb=0.98\n\n\
                family=ellipse\na=1.05\nb=0.952\n\n\
                family=ellipse\na=1.1\nb=0.909\n\n\
                family=ellipse\na=1.2\nb=0.833\n\n\
                family=ellipse\na=1.35\nb=0.741\n";
    println!("{}", run_sweep(&base, axis).unwrap());
    println!();
    println!("{}", run_report(&out).unwrap());
}
