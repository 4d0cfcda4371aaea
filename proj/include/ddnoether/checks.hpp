#pragma once

#include <string>
#include <vector>

#include "ddnoether/sysfile.hpp"

namespace ddn {

// Check directives of a system file:
//
//   symmetry X [case-i|case-ii|regular]      field or charfield
//   point-symmetries X1 X2 ...               generators of solve-point
//   euler L F1 | euler L = <e>, ...          E(L) verbatim
//   variational L X [not]
//   noether L X law                          equivalent law, equal Q
//   cl law identity|on-solutions|fails
//   formal = <e>
//   adjoint = <e>, ...
//   self-adjoint S strict|quasi|weak
//   extend X = <e>, ...                      Q* of the extended field
//   adjoint-cl X S law [remark|theorem]
//   numeric law TOL                          ring 20, dt 1e-3, t in [0,1], seed 42
struct CheckOutcome {
  std::string text;
  bool pass = false;
  std::string detail;
};

CheckOutcome run_check(const SystemFile& file, const Check& check);
std::vector<CheckOutcome> run_checks(const SystemFile& file);

struct FixtureReport {
  std::string fixture;  // file name
  std::string error;    // load failure
  std::vector<CheckOutcome> outcomes;
  bool pass() const;
};

// Every *.dde file of dir, run concurrently, ordered by file name.
std::vector<FixtureReport> run_corpus(const std::string& dir);

}  // namespace ddn
