#pragma once

#include <iosfwd>

namespace tlidar {

/// Entry point of the `tlidar` tool. Exit codes: 0 success, 1 usage or
/// configuration error, 2 data error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tlidar
