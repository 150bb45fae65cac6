use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("cargo sets this"));
    let header = crate_dir.join("include").join("hf.h");

    let mut config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("HF_FFI_H".to_string()),
        header: Some("/* C interface for the homogeneous-flow laboratory. Generated; do not edit. */".to_string()),
        cpp_compat: true,
        documentation: true,
        ..cbindgen::Config::default()
    };
    config.enumeration.prefix_with_name = true;

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen failed to generate the C header")
        .write_to_file(header);

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");
}
