#pragma once

#include <memory>

#include "cutflux/forms.hpp"

namespace cutflux::testing {

/// Structured mesh on [-1,1]^2 with its cut topology and discretization.
struct Case
{
    TriangleMesh mesh;
    InterfaceProblem problem;
    CutTopology cut;
    std::unique_ptr<Discretization> disc;

    Case(Index n, InterfaceProblem p, SolverConfig cfg = {})
        : mesh(build_structured_mesh(n, n, {-1, -1, 1, 1})), problem(std::move(p))
    {
        cut = classify_cells(mesh, problem.level_set);
        disc = std::make_unique<Discretization>(cut, problem.diffusion, cfg);
    }
};

} // namespace cutflux::testing
