use clap::Parser;
use llt_lab::cli::{exit_code, run, Args};

fn main() {
    if let Some(threads) = std::env::var("LLT_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let result = Args::parse().into_config().and_then(|cfg| run(&cfg));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
