// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    std::process::exit(noisetensor_cli::main_with_args(std::env::args_os()));
}
