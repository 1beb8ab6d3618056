// SPDX-License-Identifier: Apache-2.0

//! Builds the kernel artifact as a separate cargo invocation so it gets its
//! own `panic = "abort"` profile and no std, then hands its path to the
//! crate through `DUOSTRESS_ARTIFACT`.

use std::env;
use std::path::PathBuf;
use std::process::Command;

fn main() {
    let manifest_dir = PathBuf::from(env::var_os("CARGO_MANIFEST_DIR").unwrap());
    let out_dir = PathBuf::from(env::var_os("OUT_DIR").unwrap());
    let artifact_manifest = manifest_dir.join("kernel-artifact/Cargo.toml");
    let target_dir = out_dir.join("kernel-artifact");

    println!("cargo:rerun-if-changed=kernel-artifact/Cargo.toml");
    println!("cargo:rerun-if-changed=kernel-artifact/src");
    println!("cargo:rerun-if-changed=../kernels/Cargo.toml");
    println!("cargo:rerun-if-changed=../kernels/src");

    let cargo = env::var_os("CARGO").unwrap_or_else(|| "cargo".into());
    let mut cmd = Command::new(cargo);
    cmd.arg("build")
        .arg("--release")
        .arg("--manifest-path")
        .arg(&artifact_manifest)
        .arg("--target-dir")
        .arg(&target_dir);
    if env::var_os("CARGO_NET_OFFLINE").is_some() {
        cmd.arg("--offline");
    }
    for var in [
        "CARGO_TARGET_DIR",
        "RUSTFLAGS",
        "CARGO_ENCODED_RUSTFLAGS",
        "CARGO_BUILD_RUSTFLAGS",
        "RUSTC_WRAPPER",
        "RUSTC_WORKSPACE_WRAPPER",
        "CARGO_BUILD_TARGET",
        "CARGO_MAKEFLAGS",
        "MAKEFLAGS",
    ] {
        cmd.env_remove(var);
    }
    let status = cmd.status().expect("failed to run cargo for the kernel artifact");
    if !status.success() {
        panic!("kernel artifact build failed: {status}");
    }

    let lib = format!(
        "{}duostress_kernels{}",
        env::consts::DLL_PREFIX,
        env::consts::DLL_SUFFIX
    );
    let path = target_dir.join("release").join(lib);
    assert!(path.exists(), "kernel artifact missing at {}", path.display());
    println!("cargo:rustc-env=DUOSTRESS_ARTIFACT={}", path.display());
}
