#pragma once

namespace evonudge::cli {

// Runs one subcommand; returns 0 on success, 1 on usage errors, 2 on data or config errors.
int dispatch(int argc, const char* const* argv);

}  // namespace evonudge::cli
