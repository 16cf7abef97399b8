// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace pclft {

/// Environment variable naming the default data directory. Relative data
/// paths that do not exist as given are looked up there, and the canonical
/// corpus file names are used when no path is given at all.
inline constexpr const char* kDataDirEnv = "PCLFT_DATA_DIR";

/// Entry point behind the `pclft` executable. Returns the process exit code:
/// 0 on success, 1 on runtime failures, 2 on usage and configuration errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pclft
