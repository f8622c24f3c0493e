//! A verification suite driven through the run configuration, as the command line does.

use bolab::cli::{verify, RunConfig, Suite};

fn main() -> bolab::Result<()> {
    let cfg: RunConfig = serde_json::from_str(r#"{"geometry": "line", "n": 256, "init": "soliton c=1", "kappa": [8], "T": 0.5}"#)?;
    cfg.validate()?;
    let report = verify(&cfg, Suite::Virial)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
