//! Produces the complete report bundle for one configuration, exactly what
//! `plapsym deficits <config>` writes: mesh.txt, u.txt, tables.csv,
//! deficits.json, and the plots. Point a browser at the SVGs afterwards.

use plapsym::pipeline::run_deficits;
use plapsym::RunConfig;

fn main() {
    let out = std::env::temp_dir().join("plapsym_full_bundle");
    let cfg = RunConfig::parse(&format!(
        "family=star\nr=1\namp=0.05\nk=5\np=2.5\nh=0.05\nt_levels=64\noutput_dir={}\n",
        out.display()
    ))
    .unwrap();
    println!("config hash {}", cfg.hash());
    println!("{}", run_deficits(&cfg).unwrap());
    for entry in std::fs::read_dir(&out).unwrap() {
        println!("  {}", entry.unwrap().path().display());
    }
}
