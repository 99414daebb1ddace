//! Reference classifier adapter: reads one request per line on stdin and
//! answers each with the bundled keyword rules, one response per line.
//!
//! `--language ja` picks the Japanese rules; `--fixed LABEL` answers every
//! request with LABEL, which is handy as a stub.

use std::io::{BufRead, BufWriter, Write};

use anyhow::{bail, Context, Result};
use clap::Parser;
use egolead::conversation::{AdapterRequest, AdapterResponse, RuleSet};

#[derive(Parser)]
#[command(name = "egolead-rule-adapter", version)]
struct Args {
    #[arg(long, default_value = "en")]
    language: String,
    #[arg(long)]
    fixed: Option<String>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let Some(rules) = RuleSet::bundled(&args.language) else {
        bail!("no bundled rules for `{}`", args.language);
    };
    let stdin = std::io::stdin();
    let mut out = BufWriter::new(std::io::stdout().lock());
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: AdapterRequest = serde_json::from_str(&line).context("bad request line")?;
        let label = match &args.fixed {
            Some(l) => l.clone(),
            None => rules.label_text(&req.text).to_string(),
        };
        serde_json::to_writer(&mut out, &AdapterResponse { id: req.id, label })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
