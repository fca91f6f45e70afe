#pragma once

#include <ostream>

namespace wes::cli {

// Exit codes: 0 success, 1 validation error, 2 runtime failure. Errors go to
// `err` as single-line JSON.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wes::cli
