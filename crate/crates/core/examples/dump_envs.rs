//! Regenerate the shipped environment preset files.
//!
//! Usage: `cargo run -p spikepath --example dump_envs -- <dir>`

use spikepath::jsonutil::to_canonical_json;
use spikepath::network::{Environment, PRESET_NAMES};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "environments".into());
    std::fs::create_dir_all(&dir).expect("create output dir");
    for name in PRESET_NAMES {
        let env = Environment::preset(name).expect("preset");
        let path = format!("{dir}/{name}.json");
        std::fs::write(&path, to_canonical_json(env.to_json())).expect("write preset");
        println!("wrote {path}");
    }
}
