#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

#include "vsmactr/embedding.hpp"
#include "vsmactr/rng.hpp"
#include "vsmactr/vsm_task.hpp"

namespace testsupport {

inline std::string fixture_path(std::string_view name) { return std::string(VSMACTR_FIXTURE_DIR) + "/" + std::string(name); }

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Pre-assembly 46 s / 90 %, assembly 40 s / 85 %: assembly's delta is 0.02
// (inefficient) and pre-assembly's is 0.0149 (efficient), so the three
// strategies in turn earn -2, 0 and +6 as in the recorded trace.
inline vsmactr::ProblemInstance replay_instance() { return {46.0, 0.90, 40.0, 0.85, 4.0}; }

// Forces novice, intermediate, expert on three consecutive trials.
inline vsmactr::Engine scripted_replay(vsmactr::EngineConfig cfg = {})
{
    using namespace vsmactr;
    const auto inst = replay_instance();
    Engine engine(build_persona_rules(inst), cfg);
    static const char* const script[] = {"DECIDE-BRUTE", "DECIDE-INTERMEDIATE", "EXPERT-STRATEGY"};
    auto round = std::make_shared<int>(0);
    engine.set_selector([round](std::span<const Production* const> cs, Rng&) -> std::size_t {
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (cs[i]->name == script[*round % 3]) {
                ++*round;
                return i;
            }
        }
        return 0;
    });
    init_run(engine, inst);
    const TaskModels models;
    for (int t = 0; t < 3; ++t) run_trial(engine, inst, models, "replay", 0, t);
    return engine;
}

struct LabelledSet {
    vsmactr::Matrix x;
    std::vector<int> y;
};

// Balanced two-class set: unit-variance Gaussians with means -3 / +3 on the
// first column, the other columns pure N(0,1) noise.
inline LabelledSet separable_set(int n = 200, int dims = 2, std::uint64_t seed = 11)
{
    vsmactr::Rng rng(seed);
    LabelledSet s{vsmactr::Matrix(n, dims), std::vector<int>(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        s.y[static_cast<std::size_t>(i)] = label;
        for (int j = 0; j < dims; ++j) s.x(i, j) = vsmactr::standard_normal(rng);
        s.x(i, 0) += label == 1 ? 3.0 : -3.0;
    }
    return s;
}

// Bayes error of separable_set: the optimal rule is sign(x0), wrong with
// probability Phi(-3).
inline double separable_bayes_error() { return 0.5 * std::erfc(3.0 / std::sqrt(2.0)); }

} // namespace testsupport
