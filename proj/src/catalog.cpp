#include "gvc/catalog.hpp"

namespace gvc {

StructureTensor so3_constants() {
  StructureTensor C(3, Mat::Zero(3, 3));
  C[0](1, 2) = 1;
  C[0](2, 1) = -1;
  C[1](2, 0) = 1;
  C[1](0, 2) = -1;
  C[2](0, 1) = 1;
  C[2](1, 0) = -1;
  return C;
}

AlgebroidStructure so3_algebra() { return lie_algebra(3, so3_constants()); }

AlgebroidStructure martinet_structure() {
  AlgebroidStructure s;
  s.base_dim = 3;
  s.fiber_rank = 3;
  s.anchor = [](const Vec& q) {
    Mat rho = Mat::Zero(3, 3);
    rho(0, 1) = 1;
    rho(1, 0) = 1;
    rho(2, 1) = q(1) * q(1) / 2;
    rho(2, 2) = 1;
    return rho;
  };
  s.structure = [](const Vec& q) {
    StructureTensor C(3, Mat::Zero(3, 3));
    C[2](0, 1) = q(1);
    C[2](1, 0) = -q(1);
    return C;
  };
  return s;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"free_particle", "free particle on the line in the coordinate frame",
       R"(kind = lagrangian
structure = coordinate
n = 1
lagrangian = 0.5*y1^2

[initial]
q = 0
y = 1

[run]
t1 = 1
dt = 0.001
)"},

      {"sho", "harmonic oscillator with unit frequency",
       R"(kind = lagrangian
structure = coordinate
n = 1
lagrangian = 0.5*y1^2 - 0.5*q1^2

[initial]
q = 1
y = 0

[run]
t1 = 10
dt = 0.001
)"},

      {"pendulum", "planar pendulum with unit gravity over length",
       R"(kind = lagrangian
structure = coordinate
n = 1
lagrangian = 0.5*y1^2 + cos(q1)

[initial]
q = 1
y = 0

[run]
t1 = 5
dt = 0.001
)"},

      {"martinet", "flat Martinet sub-Riemannian problem as a constrained variational flow",
       R"(kind = vakonomic
structure = martinet
r = 1
lagrangian = 0.5*(y1^2 + y2^2)
phi1 = 0

[initial]
q = 0 0 0
y = 1 0.5
mu = 1

[run]
t1 = 1
dt = 0.001
)"},

      {"rigid_body", "free rigid body with inertia diag(1,2,3) as an Euler-Poincare flow",
       R"(kind = euler_poincare
structure = algebra
m = 3
lagrangian = 0.5*(y1^2 + 2*y2^2 + 3*y3^2)

[structure]
c_1_2_3 = 1
c_2_3_1 = 1
c_3_1_2 = 1

[initial]
y = 1 1 1

[run]
t1 = 1
dt = 0.001
)"},

      {"lie_poisson_so3", "rigid-body momentum flow on the dual of so(3), inertia diag(1,2,3)",
       R"(kind = lie_poisson
structure = algebra
m = 3
hamiltonian = 0.5*(p1^2 + p2^2/2 + p3^2/3)

[structure]
c_1_2_3 = 1
c_2_3_1 = 1
c_3_1_2 = 1

[initial]
p = 1 2 3

[run]
t1 = 1
dt = 0.001
)"},

      {"lq_pontryagin", "scalar linear-quadratic optimal control solved by shooting",
       R"(kind = pontryagin
structure = coordinate
n = 1
k = 1
gamma1 = u1
cost = 0.5*(q1^2 + u1^2)

[initial]
q = 1

[terminal]
free = true

[run]
t1 = 1
dt = 0.001
)"},

      {"discrete_free_particle", "discrete free particle with exactly transported momentum",
       R"(kind = discrete_el
n = 1
lagrangian_d = 0.5*(y1 - q1)^2/0.1

[initial]
q0 = 0
q1 = 0.1

[run]
steps = 1000
)"},

      {"discrete_sho", "harmonic oscillator under the midpoint discrete Lagrangian, step 0.01",
       R"(kind = discrete_el
n = 1
lagrangian_d = 0.5*(y1 - q1)^2/0.01 - 0.01*0.5*(0.5*(q1 + y1))^2

[initial]
q0 = 1
q1 = 0.99995000041666528

[run]
steps = 1000
)"},

      {"discrete_lqr", "discrete linear-quadratic regulator over twenty steps",
       R"(kind = discrete_ocp
n = 1
k = 1
gamma_d1 = q1 + 0.1*u1
cost = 0.05*(q1^2 + u1^2)

[initial]
q0 = 1

[terminal]
free = true

[run]
steps = 20
)"},

      {"discrete_lie_poisson_so3", "discrete momentum updates on SO(3) with a fixed step element",
       R"(kind = lie_poisson
structure = so3

[initial]
v = 0.02 0.01 0.015
mu = 1 0 0

[run]
steps = 10000
)"},

      {"pair_groupoid_del", "free particle as a discrete Euler-Lagrange flow on the pair groupoid",
       R"(kind = groupoid_del
structure = pair
n = 1
lagrangian_d = 5*y1^2

[initial]
q0 = 0
v0 = 0.1

[run]
steps = 100
)"},
  };
  return entries;
}

const CatalogEntry* find_catalog(const std::string& name) {
  for (const CatalogEntry& entry : catalog()) {
    if (entry.name == name) {
      return &entry;
    }
  }
  return nullptr;
}

}  // namespace gvc
