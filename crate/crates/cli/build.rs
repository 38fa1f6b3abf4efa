use std::path::Path;
use std::process::Command;

fn git(dir: &str, args: &[&str]) -> Option<String> {
    let out = Command::new("git").args(args).current_dir(dir).output().ok()?;
    let s = String::from_utf8_lossy(&out.stdout).trim().to_string();
    (out.status.success() && !s.is_empty()).then_some(s)
}

fn main() {
    let pkg = env!("CARGO_PKG_VERSION");
    let manifest = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let head = Path::new(&manifest).join("../../.git/HEAD");
    if head.exists() {
        println!("cargo:rerun-if-changed={}", head.display());
    }
    let version = git(&manifest, &["describe", "--tags", "--dirty"])
        .or_else(|| git(&manifest, &["describe", "--always", "--dirty"]).map(|h| format!("v{pkg}-0-g{h}")))
        .unwrap_or_else(|| format!("v{pkg}-unknown"));
    println!("cargo:rustc-env=RELKERNEL_VERSION={version}");
}
