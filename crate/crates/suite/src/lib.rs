//! Helpers for the acceptance checks in `tests/acceptance.rs`.

use std::io::Write;
use std::path::Path;

/// Runs the command-line program in-process against `root` and panics on a nonzero exit.
pub fn ok(root: &Path, args: &[&str]) -> String {
    let mut full: Vec<String> = vec!["fretalign".into(), "--root".into(), root.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fretalign_cli::run(full, &mut out, &mut err);
    let out = String::from_utf8_lossy(&out).into_owned();
    assert_eq!(code, 0, "{args:?} exited {code}:\n{out}\n{}", String::from_utf8_lossy(&err));
    out
}

/// Prints `<id> PASS|FAIL: detail` to the process's standard output, where
/// the test harness does not capture it, then asserts `pass`.
pub fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{id} {verdict}: {detail}");
    let _ = out.flush();
    assert!(pass, "{id} {verdict}: {detail}");
}
