//! Stable numeric formatting and output sinks.
//!
//! Numbers are printed with Rust's shortest round-trip representation (the
//! exact f64 value survives a parse back), with a trailing `.0` added to
//! integral values so outputs read as floats. Files are UTF-8 with LF line
//! endings; identical (config, seed) reruns produce identical bytes.

use num_complex::Complex64;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn fmt_f64(v: f64) -> String {
    let s = format!("{v}");
    if v.is_finite() && !s.contains('.') && !s.contains('e') && !s.contains('E') {
        format!("{s}.0")
    } else {
        s
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    // Collapse negative zero so signs render cleanly.
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im >= 0.0 {
        format!("{}+{}i", fmt_f64(re), fmt_f64(im))
    } else {
        format!("{}-{}i", fmt_f64(re), fmt_f64(-im))
    }
}

/// Write lines (joined with LF, trailing LF) to the path or stdout.
pub fn emit(lines: &[String], output: Option<&PathBuf>) -> std::io::Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    match output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())
        }
        Some(path) => write_atomically(path, text.as_bytes()),
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::write(path, bytes)
}
