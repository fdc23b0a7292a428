#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rarf/model.hpp"
#include "rarf/rng.hpp"

namespace rarf_test {

// Central-difference gradient check of model parameters whose names start
// with `prefix`. `build` constructs the quantity under test on a fresh
// graph; non-scalar outputs are projected with weights drawn once.
struct FdModelResult {
    double max_rel = 0.0;
    std::size_t checked = 0;
};

inline FdModelResult fd_check_model(rarf::Forecaster& model,
                                    const std::function<rarf::Var(rarf::ModelGraph&)>& build,
                                    const std::string& prefix,
                                    std::size_t max_coords_per_param, std::uint64_t seed,
                                    double step = 1e-5) {
    using namespace rarf;
    Tensor proj_w;
    bool proj_init = false;
    auto loss_of = [&](ModelGraph& g) {
        Var out = build(g);
        if (out.value().size() == 1 && out.value().rank() == 1) return out;
        if (!proj_init) {
            Rng wrng(derive_seed(seed, "fd_proj"));
            proj_w = Tensor(out.value().shape);
            for (double& v : proj_w.data) v = wrng.uniform(-1.0, 1.0);
            proj_init = true;
        }
        return sum(mul(out, g.tape().constant(proj_w)));
    };

    model.params().zero_grads();
    {
        ModelGraph g(model, true);
        g.backward(loss_of(g));
    }
    std::vector<std::pair<Param*, Tensor>> targets;
    for (Param& p : model.params().all()) {
        if (p.name.rfind(prefix, 0) == 0 && p.name.rfind("loc_norm.", 0) != 0)
            targets.emplace_back(&p, p.grad);
    }

    auto eval = [&]() {
        ModelGraph g(model, false);
        return loss_of(g).value().data[0];
    };

    Rng pick(derive_seed(seed, "fd_pick"));
    FdModelResult res;
    for (auto& [p, analytic] : targets) {
        std::vector<std::size_t> coords;
        if (p->value.size() <= max_coords_per_param) {
            for (std::size_t i = 0; i < p->value.size(); ++i) coords.push_back(i);
        } else {
            for (std::size_t i = 0; i < max_coords_per_param; ++i)
                coords.push_back(static_cast<std::size_t>(pick.below(p->value.size())));
        }
        for (std::size_t i : coords) {
            const double orig = p->value.data[i];
            p->value.data[i] = orig + step;
            const double up = eval();
            p->value.data[i] = orig - step;
            const double dn = eval();
            p->value.data[i] = orig;
            const double fd = (up - dn) / (2.0 * step);
            const double an = analytic.data[i];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            res.max_rel = std::max(res.max_rel, rel);
            ++res.checked;
        }
    }
    return res;
}

inline rarf::Tensor random_matrix(std::size_t r, std::size_t c, rarf::Rng& rng) {
    rarf::Tensor t({r, c});
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

} // namespace rarf_test
