#pragma once

#include "loopsum/path_clauses.hpp"
#include "test_util.hpp"

namespace loopsum::testing {

inline pc::PathProgram path_program(const chc::Program &p, rx::StarOrder order = rx::StarOrder::Ascending) {
    rx::Re e = rx::eliminate_multipath(rx::path_expression(build_cfg(p), p.entry, chc::kTrue), order);
    return pc::unfold_simplify(pc::generate(p, e, p.entry));
}

inline pc::CountedProgram counted(const chc::Program &p) { return pc::add_counters(path_program(p)); }

inline Polynomial P(const std::string &s) { return parse_polynomial(s); }

} // namespace loopsum::testing
