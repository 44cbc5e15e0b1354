// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace paxnet::cli {

// Dispatches one invocation. Returns 0 on success, 1 on domain errors and 2
// on usage errors. out receives data output; err receives the resolved
// configuration and diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace paxnet::cli
