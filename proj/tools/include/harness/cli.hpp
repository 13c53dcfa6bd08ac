#pragma once

namespace peat::harness {

// Entry point behind the peat binary: train, eval, sweep, summarize, plot,
// and selftest subcommands.
int cli_main(int argc, const char* const* argv);

}  // namespace peat::harness
