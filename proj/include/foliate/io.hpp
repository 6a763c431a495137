#pragma once

#include <string>

#include "foliate/solver.hpp"

namespace foliate {

/// Family round-trip as JSON (leaves with full graph coefficients);
/// deterministic output, loadable by cmd_foliation_check.
void save_family(const Family& family, const std::string& path);
Family load_family(const std::string& path);

} // namespace foliate
