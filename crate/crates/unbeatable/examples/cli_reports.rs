//! Drive the command-line interface programmatically: write an adversary
//! file, run a subcommand, and read the machine-readable report.
//!
//! The same subcommands are available from the shell via the `unbeatable`
//! binary; every invocation prints a single JSON report.
//!
//! ```bash
//! cargo run --release --example cli_reports
//! ```

use unbeatable::cli;

fn main() {
    let dir = std::env::temp_dir();
    let path = dir.join("unbeatable_example_adversary.json");
    std::fs::write(
        &path,
        r#"{"n":4,"t":2,"values":[1,0,1,1],"crashes":[{"process":2,"round":1,"delivers_to":[3]}]}"#,
    )
    .unwrap();

    for argv in [
        vec![
            "unbeatable".to_string(),
            "simulate".into(),
            "--protocol".into(),
            "opt0".into(),
            "--adversary".into(),
            path.display().to_string(),
        ],
        vec![
            "unbeatable".into(),
            "predicates".into(),
            "--adversary".into(),
            path.display().to_string(),
            "--process".into(),
            "1".into(),
            "--time".into(),
            "2".into(),
        ],
        vec![
            "unbeatable".into(),
            "compare".into(),
            "--a".into(),
            "opt0".into(),
            "--b".into(),
            "p0".into(),
            "--n".into(),
            "3".into(),
            "--t".into(),
            "1".into(),
        ],
    ] {
        println!("$ {}", argv.join(" "));
        let code = cli::run(argv);
        println!("(exit code {code})\n");
    }
}
