#include <iomanip>
#include <sstream>

#include "fraug/experiments.hpp"
#include "json.hpp"

namespace fraug {
namespace {

nlohmann::json metrics_json(const Metrics& m) {
    return {{"mse", m.mse}, {"mae", m.mae}, {"n_samples", m.n_samples}};
}

}  // namespace

std::string report_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["protocol"] = to_string(r.protocol);
    j["dataset"] = r.dataset_id;
    j["lookback"] = r.lookback;
    j["horizons"] = r.horizons;
    j["rate_grid"] = r.rate_grid;
    j["seeds"] = r.seeds;
    j["shared_mask_across_channels"] = r.shared_mask_across_channels;
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    if (r.protocol == Protocol::ColdStart) j["fraction"] = r.fraction;
    if (r.protocol == Protocol::Ttt) j["parts"] = r.parts;

    j["cells"] = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json cell{{"kind", to_string(c.kind)},
                            {"horizon", c.horizon},
                            {"median_test_mse", c.median_test_mse},
                            {"median_test_mae", c.median_test_mae},
                            {"chosen_rate", c.chosen_rate}};
        if (r.protocol == Protocol::ColdStart) cell["chosen_factor"] = c.chosen_factor;
        cell["per_seed"] = nlohmann::json::array();
        for (const auto& s : c.per_seed) {
            nlohmann::json sj{{"seed", s.seed},
                              {"rate", s.rate},
                              {"val", metrics_json(s.val)},
                              {"test", metrics_json(s.test)},
                              {"epochs_run", s.trace.epochs.size()},
                              {"best_epoch", s.trace.best_epoch}};
            if (r.protocol == Protocol::ColdStart) sj["factor"] = s.factor;
            sj["candidates"] = nlohmann::json::array();
            for (const auto& cand : s.candidates)
                sj["candidates"].push_back({{"rate", cand.rate}, {"factor", cand.factor}, {"val_mse", cand.val.mse}});
            cell["per_seed"].push_back(std::move(sj));
        }
        j["cells"].push_back(std::move(cell));
    }

    if (r.protocol == Protocol::Ttt) {
        j["ttt"] = nlohmann::json::array();
        for (const auto& c : r.ttt)
            j["ttt"].push_back({{"kind", to_string(c.kind)},
                                {"horizon", c.horizon},
                                {"rate", c.rate},
                                {"seeds", c.seeds},
                                {"per_seed_losses", c.per_seed_losses},
                                {"median_losses", c.median_losses},
                                {"mean_loss_per_seed", c.mean_loss_per_seed},
                                {"median_mean_loss", c.median_mean_loss},
                                {"copy_schedules", c.copy_schedules}});
    }
    return j.dump(2);
}

std::string report_text(const ExperimentReport& r) {
    std::ostringstream out;
    out << "protocol " << to_string(r.protocol) << "  dataset " << r.dataset_id << "  lookback " << r.lookback
        << "  seeds " << r.seeds.size() << "  wall " << std::fixed << std::setprecision(1) << r.wall_clock_seconds
        << "s\n";
    out << std::setprecision(4);
    if (r.protocol != Protocol::Ttt) {
        out << std::left << std::setw(26) << "kind" << std::right << std::setw(8) << "horizon" << std::setw(10) << "mse"
            << std::setw(10) << "mae" << std::setw(8) << "rate";
        if (r.protocol == Protocol::ColdStart) out << std::setw(8) << "factor";
        out << '\n';
        for (const auto& c : r.cells) {
            out << std::left << std::setw(26) << to_string(c.kind) << std::right << std::setw(8) << c.horizon
                << std::setw(10) << c.median_test_mse << std::setw(10) << c.median_test_mae << std::setw(8)
                << std::setprecision(2) << c.chosen_rate << std::setprecision(4);
            if (r.protocol == Protocol::ColdStart) out << std::setw(8) << c.chosen_factor;
            out << '\n';
        }
    } else {
        out << std::left << std::setw(26) << "kind" << std::right << std::setw(8) << "horizon" << std::setw(12)
            << "mean loss" << '\n';
        for (const auto& c : r.ttt)
            out << std::left << std::setw(26) << to_string(c.kind) << std::right << std::setw(8) << c.horizon
                << std::setw(12) << c.median_mean_loss << '\n';
    }
    return out.str();
}

std::string trace_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "kind,horizon,seed,epoch,train_loss,val_loss\n";
    for (const auto& c : r.cells)
        for (const auto& s : c.per_seed)
            for (const auto& e : s.trace.epochs)
                out << to_string(c.kind) << ',' << c.horizon << ',' << s.seed << ',' << e.epoch << ',' << e.train_loss
                    << ',' << e.val_loss << '\n';
    return out.str();
}

std::string ttt_parts_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "kind,horizon,seed,part,test_mse\n";
    for (const auto& c : r.ttt)
        for (std::size_t si = 0; si < c.seeds.size(); ++si)
            for (std::size_t p = 0; p < c.per_seed_losses[si].size(); ++p)
                out << to_string(c.kind) << ',' << c.horizon << ',' << c.seeds[si] << ',' << p + 1 << ','
                    << c.per_seed_losses[si][p] << '\n';
    return out.str();
}

}  // namespace fraug
