#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ddnoether/adjointness.hpp"
#include "ddnoether/symmetry.hpp"
#include "ddnoether/variational.hpp"

namespace ddn {

// Line-oriented system file, header `ddnoether/1`.
//
//   continuous t            discrete n            dependent u
//   auxiliary v             parameter a [positive]
//   function a(m)
//   equation F1: <expr> [lead <atom> = <expr>]
//   solve F1: <atom> = <expr>           extra solved form for F1
//   lagrangian L1: <expr>
//   field X1: xi = <e>, ...; phi = <e>, ...
//   charfield Y1: Q = <e>, ...[; Qaux = <e>, ...]
//   sub S1: v = <e>[; ...]
//   cl law1: [P1 = <e>, ...;] [P2 = <e>, ...;] [Q = <e>, ...]
//   check <words...>
//
// Declarations precede every directive. Auxiliary names are generated when
// not declared. `#` starts a comment.

template <class T>
struct Named {
  std::string name;
  T value;
};

struct Check {
  std::size_t line = 0;
  std::string text;  // the directive after `check`
};

struct SystemFile {
  Context ctx;
  std::vector<std::string> equation_names;
  DDESystem system;
  std::vector<Named<Expr>> lagrangians;
  std::vector<Named<VectorField>> fields;
  std::vector<Named<EvolutionaryField>> charfields;
  std::vector<Named<Substitution>> subs;
  std::vector<Named<ConservationLaw>> laws;
  std::vector<Check> checks;

  const Expr& lagrangian(const std::string& name) const;
  const VectorField* field(const std::string& name) const;
  const EvolutionaryField* charfield(const std::string& name) const;
  // A charfield, or the evolutionary form of a regular field.
  EvolutionaryField evolutionary(const std::string& name) const;
  const Substitution& sub(const std::string& name) const;
  const ConservationLaw& law(const std::string& name) const;
};

// Throws ParseError with the byte offset into the text.
SystemFile parse_system_file(std::string_view text);
SystemFile load_system_file(const std::string& path);

// Canonical text; parses back to the same canonical text.
std::string render_system_file(const SystemFile& file);

// `v = -u` (or `v1 = ...; v2 = ...`) against the file's context.
Substitution parse_substitution(std::string_view text, const Context& ctx);

// Splits on `sep` outside (), [] and {}.
std::vector<std::string> split_top(std::string_view text, char sep);

}  // namespace ddn
