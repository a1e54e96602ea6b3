#pragma once

#include <string>
#include <vector>

#include "gvc/core.hpp"

namespace gvc {

// Named, ready-to-run problem description in the declarative text format
// consumed by parse_problem.
struct CatalogEntry {
  std::string name;
  std::string description;
  std::string text;
};

const std::vector<CatalogEntry>& catalog();

// Null when no entry has that name.
const CatalogEntry* find_catalog(const std::string& name);

// so(3) structure constants: C^C_AB = ε_CAB, so bracket_term(C, y, w) = y × w.
StructureTensor so3_constants();

// so(3) as an algebroid over a point.
AlgebroidStructure so3_algebra();

// Flat Martinet structure on ℝ³: anchor columns (∂/∂q², ∂/∂q¹ + (q²)²/2 ∂/∂q³,
// ∂/∂q³) with the single nonzero bracket C³₁₂ = q², the standard
// sub-Riemannian testbed for constrained variational flows.
AlgebroidStructure martinet_structure();

}  // namespace gvc
