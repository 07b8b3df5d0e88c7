#pragma once

// CLI front-end: subcommand dispatch, flag/config resolution, manifest
// writing, and failure cleanup. Kept out of main() so tests can drive the
// exact production entry point in-process.

namespace gv {

// Returns the process exit status. Errors print a single line
// "error: <code>: <message>" to stderr; partial outputs are removed.
int run_cli(int argc, const char* const* argv);

}  // namespace gv
