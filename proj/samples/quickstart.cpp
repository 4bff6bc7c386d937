// Generates a small world, fits DV-WPX on randomized traffic and ranks one
// request with a fresh bundle that uses the derived region weights.

#include <cstdio>

#include "wpx/wpx.hpp"

int main() {
    using namespace wpx;

    sim::WorldConfig cfg;
    cfg.seed = 7;
    const auto world = sim::generate_world(cfg);

    const auto panel = sim::generate_panel(world, 20000);
    dml::DmlConfig dc;
    dc.seed = 7;
    const auto model = dml::estimate_dvwpx(panel, dc);
    const auto weights = dml::derive_region_weights(model, {"top", "mid", "bot"});
    std::printf("beta   top %.3f  mid %.3f  bot %.3f\n", model.estimate.beta(0), model.estimate.beta(1),
                model.estimate.beta(2));
    std::printf("weights top %.3f  mid %.3f  bot %.3f\n", weights.top, weights.mid, weights.bot);

    bandit::RewardWeights rw;
    auto bundle = bandit::make_bundle(sim::template_ids(world), rw, weights);

    const auto ev = sim::draw_event(world, 0, 0);
    const auto candidates = sim::eligible_layouts(world, ev);
    const auto ctx = sim::context_of(world, ev, candidates);
    Rng rng(7);
    const auto sel = bandit::select_template(ctx, candidates, bundle, rng);
    std::printf("chose template %u of %zu candidates\n", sel.template_id.value, candidates.size());
    return 0;
}
