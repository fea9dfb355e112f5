use std::path::PathBuf;
use std::process::Command;

use ramanujan_cli::OutputRecord;

pub struct Invocation {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub env: &'static [(&'static str, &'static str)],
    pub exit: i32,
}

pub const INVOCATIONS: &[Invocation] = &[
    Invocation { name: "verify_rmt_exp", args: &["verify", "rmt", "--catalog", "exp", "--param", "a=2", "--s", "3"], env: &[], exit: 0 },
    Invocation { name: "verify_rmt_exp_json", args: &["verify", "rmt", "--catalog", "exp", "--param", "a=2", "--s", "3", "--json"], env: &[], exit: 0 },
    Invocation {
        name: "verify_rmt_user_pair_json",
        args: &["verify", "rmt", "--phi", "1/(k+1)", "--closed-form", "(1-exp(-x))/x", "--s", "0.5", "--json"],
        env: &[],
        exit: 0,
    },
    Invocation { name: "verify_lemma2_erf", args: &["verify", "lemma2", "--catalog", "erf", "--n", "2"], env: &[], exit: 0 },
    Invocation { name: "verify_frullani_exp", args: &["verify", "frullani", "--catalog", "exp", "--alpha", "2", "--beta", "1"], env: &[], exit: 0 },
    Invocation { name: "verify_rmt_zero_tolerance", args: &["verify", "rmt", "--catalog", "exp", "--s", "2.5", "--tol", "0"], env: &[], exit: 1 },
    Invocation {
        name: "verify_hardy_env_tolerance_json",
        args: &["verify", "hardy", "--catalog", "geometric", "--s", "0.25", "--json"],
        env: &[("RMT_DEFAULT_TOL", "1e-20")],
        exit: 1,
    },
    Invocation { name: "verify_hardy_pole", args: &["verify", "hardy", "--catalog", "geometric", "--s", "1"], env: &[], exit: 2 },
    Invocation { name: "verify_bad_param", args: &["verify", "rmt", "--catalog", "exp", "--param", "a", "--s", "1"], env: &[], exit: 2 },
    Invocation { name: "verify_unknown_catalog", args: &["verify", "rmt", "--catalog", "nosuch", "--s", "1"], env: &[], exit: 2 },
    Invocation {
        name: "verify_lemma2_user_pair_needs_fd",
        args: &["verify", "lemma2", "--phi", "1/(k+1)", "--closed-form", "(1-exp(-x))/x", "--n", "2"],
        env: &[],
        exit: 2,
    },
    Invocation { name: "verify_bad_env_tolerance", args: &["verify", "rmt", "--catalog", "exp", "--s", "1.5"], env: &[("RMT_DEFAULT_TOL", "tight")], exit: 2 },
    Invocation { name: "corpus_laguerre", args: &["corpus", "--filter", "laguerre"], env: &[], exit: 0 },
    Invocation { name: "corpus_json", args: &["corpus", "--json"], env: &[], exit: 0 },
    Invocation { name: "residue_exp_m0", args: &["residue", "--catalog", "exp", "--m", "0"], env: &[], exit: 0 },
    Invocation { name: "residue_exp_m1_json", args: &["residue", "--catalog", "exp", "--m", "1", "--json"], env: &[], exit: 0 },
    Invocation { name: "residue_nonstandard", args: &["residue", "--catalog", "erf", "--m", "0"], env: &[], exit: 2 },
    Invocation { name: "residue_bad_eps", args: &["residue", "--catalog", "exp", "--m", "0", "--eps", "0.5"], env: &[], exit: 2 },
];

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"))
}

pub fn render(exit: i32, stdout: &str, stderr: &str) -> String {
    format!("exit: {exit}\n--- stdout\n{stdout}--- stderr\n{stderr}")
}

/// Runs one invocation against its golden file. Set `UPDATE_GOLDEN=1` to
/// rewrite the file instead of comparing.
pub fn check(inv: &Invocation) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ramanujan"));
    cmd.args(inv.args).env_remove("RMT_DEFAULT_TOL");
    for (k, v) in inv.env {
        cmd.env(k, v);
    }
    let out = cmd.output().map_err(|e| format!("{}: spawn failed: {e}", inv.name))?;
    let code = out.status.code().ok_or_else(|| format!("{}: killed by signal", inv.name))?;
    let stdout = String::from_utf8(out.stdout).map_err(|e| format!("{}: {e}", inv.name))?;
    let stderr = String::from_utf8(out.stderr).map_err(|e| format!("{}: {e}", inv.name))?;
    if code != inv.exit {
        return Err(format!("{}: exit {code}, expected {}\n{stderr}", inv.name, inv.exit));
    }
    if inv.args.contains(&"--json") {
        for line in stdout.lines() {
            let record: OutputRecord =
                serde_json::from_str(line).map_err(|e| format!("{}: unparseable record: {e}", inv.name))?;
            let again = record.to_json();
            if again != line {
                return Err(format!("{}: round trip changed\n  {line}\n  {again}", inv.name));
            }
        }
    }
    let actual = render(code, &stdout, &stderr);
    let path = golden_path(inv.name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != actual {
        return Err(format!("{}: output differs from golden file\n--- expected\n{expected}--- actual\n{actual}", inv.name));
    }
    Ok(())
}
