#include "aiprobe/attribution.hpp"

#include "aiprobe/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

namespace aiprobe {

namespace {

    using nlohmann::json;
    using Clock = std::chrono::steady_clock;

    std::string join_bins(const std::vector<int>& bins) {
        std::string out;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(bins[i]);
        }
        return out;
    }

    // Simple index-claiming worker pool. Exceptions are handled inside the
    // task body, so workers never unwind.
    void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
        workers = std::max(1, workers);
        if (workers == 1 || count <= 1) {
            for (std::size_t i = 0; i < count; ++i) body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        auto drain = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                body(i);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
        drain();
        for (std::thread& t : pool) t.join();
    }

    struct TaskUnit {
        std::uint64_t seed = 0;
        Task task;
    };

    struct TaskOutput {
        std::vector<CampaignRecord> records;
        OracleRecord oracle_record;
        std::vector<std::vector<int>> agent_tuples;
        std::vector<std::vector<int>> oracle_tuples;
    };

    std::string agent_signature(const Simulator& sim, const AgentTrace& trace, const std::string& variant,
                                int bins) {
        CoverageLedger binning(sim.coverage_dims(), bins);
        std::vector<int> tuple = binning.bin_tuple(sim.coverage_values(trace.states.back()));
        return "agent:" + variant + ":" + join_bins(tuple);
    }

} // namespace

std::string_view verdict_kind_name(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::pass: return "pass";
        case VerdictKind::agent_error: return "agent_error";
        case VerdictKind::env_error: return "env_error";
        case VerdictKind::undetermined: return "undetermined";
    }
    return "?";
}

Verdict classify(const OracleOutcome& oracle, const AgentTrace* trace) {
    Verdict verdict;
    verdict.oracle_verdict = oracle.verdict;
    if (oracle.verdict == SearchVerdict::infeasible) {
        verdict.kind = VerdictKind::env_error;
        if (trace) verdict.agent_status = trace->terminal_status;
        return verdict;
    }
    if (oracle.verdict != SearchVerdict::feasible) {
        verdict.kind = VerdictKind::undetermined;
        if (trace) verdict.agent_status = trace->terminal_status;
        return verdict;
    }
    if (!trace) throw SimError("classify: a feasible task needs an agent trace");
    verdict.agent_status = trace->terminal_status;
    verdict.kind = trace->reached_goal() ? VerdictKind::pass : VerdictKind::agent_error;
    return verdict;
}

std::vector<int> config_bin_tuple(const EnvironmentConfig& config, int bins) {
    std::vector<DimensionSpec> dims = extract_dimensions(config.resolved, DimensionLevel::env);
    Assignment values = config.env_assignment();
    std::vector<int> tuple;
    for (const DimensionSpec& dim : dims) {
        const std::vector<Scalar>& attr_values = values.at(dim.attribute_name);
        for (const Scalar& value : attr_values) {
            if (dim.categorical) {
                const std::string& label = std::get<std::string>(value);
                auto it = std::find(dim.categories.begin(), dim.categories.end(), label);
                tuple.push_back(static_cast<int>(it - dim.categories.begin()) + 1);
            } else {
                tuple.push_back(bin_index(scalar_number(value), dim.lo, dim.hi, bins));
            }
        }
    }
    return tuple;
}

GeneratedCampaign generate_campaign(const EnvironmentTemplate& tmpl, int configs_per_seed, int tasks_per_config,
                                    const std::vector<std::uint64_t>& seeds) {
    GeneratedCampaign out;
    for (std::uint64_t seed : seeds) {
        Rng root(seed);
        GeneratedCampaign::SeedBatch batch;
        batch.seed = seed;
        GeneratedConfigs configs =
            generate_env_configs(tmpl, configs_per_seed, root.split("configs"), "s" + std::to_string(seed) + "_c");
        for (std::size_t c = 0; c < configs.configs.size(); ++c) {
            GeneratedCampaign::ConfigTasks entry;
            entry.config = std::make_shared<const EnvironmentConfig>(std::move(configs.configs[c]));
            entry.tasks = generate_tasks(entry.config, tasks_per_config, root.split("tasks", c)).tasks;
            batch.configs.push_back(std::move(entry));
        }
        out.seeds.push_back(std::move(batch));
    }
    return out;
}

CampaignResult run_campaign(const EnvironmentTemplate& tmpl, const CampaignParams& params,
                            const std::vector<std::uint64_t>& seeds) {
    const DomainPlugin& domain = domain_registry().require(tmpl.env_type);
    std::vector<std::string> variants =
        params.agent_variants.empty() ? domain.agent_variants() : params.agent_variants;

    CampaignResult result;
    result.variants = variants;
    result.seeds = seeds;

    // Generation is sequential and cheap; evaluation is the parallel part.
    std::vector<TaskUnit> units;
    GeneratedCampaign generated = generate_campaign(tmpl, params.configs_per_seed, params.tasks_per_config, seeds);
    for (GeneratedCampaign::SeedBatch& batch : generated.seeds)
        for (GeneratedCampaign::ConfigTasks& entry : batch.configs)
            for (Task& task : entry.tasks) units.push_back({batch.seed, std::move(task)});

    std::vector<TaskOutput> outputs(units.size());
    parallel_for(units.size(), params.workers, [&](std::size_t i) {
        const TaskUnit& unit = units[i];
        TaskOutput& out = outputs[i];
        const std::string& task_id = unit.task.task_id;
        const std::string& config_id = unit.task.config->config_id;

        auto emit = [&](const std::string& variant, VerdictKind kind, SearchVerdict oracle_verdict,
                        const std::string& status, const std::string& signature, const std::string& note,
                        double wall_ms) {
            CampaignRecord record;
            record.task_id = task_id;
            record.config_id = config_id;
            record.seed = unit.seed;
            record.agent_variant = variant;
            record.kind = kind;
            record.oracle_verdict = oracle_verdict;
            record.agent_status = status;
            record.anomaly_signature = signature;
            record.note = note;
            record.wall_ms = wall_ms;
            out.records.push_back(std::move(record));
        };

        out.oracle_record.task_id = task_id;
        try {
            std::unique_ptr<Simulator> sim = domain.make_simulator(unit.task);
            CoverageLedger binning(sim->coverage_dims(), params.oracle.bins);

            SearchParams oracle_params = params.oracle;
            oracle_params.seed = Rng(unit.seed).split("oracle").split(task_id).key();

            auto observe = [&](const SimState& state) {
                out.oracle_tuples.push_back(binning.bin_tuple(sim->coverage_values(state)));
            };
            auto oracle_start = Clock::now();
            OracleOutcome oracle = solve_task(unit.task, *sim, oracle_params, observe);
            double oracle_ms =
                std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - oracle_start)
                    .count();

            OracleRecord& orec = out.oracle_record;
            orec.verdict = oracle.verdict;
            orec.seed = oracle_params.seed;
            orec.nodes_expanded = oracle.search_stats.nodes_expanded + oracle.bfs_stats.nodes_expanded;
            orec.sim_steps = oracle.search_stats.sim_steps + oracle.bfs_stats.sim_steps;
            orec.wall_ms = oracle_ms;
            orec.search_verdict = oracle.search_verdict;
            orec.bfs_ran = oracle.bfs_ran;
            orec.bfs_verdict = oracle.bfs_verdict;
            for (int action : oracle.plan) orec.plan.push_back(sim->action_names()[static_cast<std::size_t>(action)]);

            if (oracle.verdict == SearchVerdict::infeasible) {
                std::string signature = "env:" + join_bins(config_bin_tuple(*unit.task.config, params.oracle.bins));
                emit("", VerdictKind::env_error, oracle.verdict, "", signature, "", oracle_ms);
                return;
            }
            if (oracle.verdict != SearchVerdict::feasible) {
                emit("", VerdictKind::undetermined, oracle.verdict, "", "", "oracle budget exhausted", oracle_ms);
                return;
            }

            std::uint64_t max_steps = params.max_steps ? params.max_steps : sim->default_max_steps();
            for (const std::string& variant : variants) {
                auto agent_start = Clock::now();
                std::unique_ptr<Agent> agent = domain.make_agent(variant, unit.task);
                AgentTrace trace = run_agent(*agent, *sim, max_steps);
                double agent_ms =
                    std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - agent_start)
                        .count();
                for (const SimState& state : trace.states)
                    out.agent_tuples.push_back(binning.bin_tuple(sim->coverage_values(state)));

                Verdict verdict = classify(oracle, &trace);
                std::string signature;
                if (verdict.kind == VerdictKind::agent_error)
                    signature = agent_signature(*sim, trace, variant, params.oracle.bins);
                emit(variant, verdict.kind, oracle.verdict, std::string(terminal_name(trace.terminal_status)),
                     signature, "", agent_ms);
            }
        } catch (const std::exception& e) {
            out.records.clear();
            out.oracle_record.verdict = SearchVerdict::timeout;
            emit("", VerdictKind::undetermined, SearchVerdict::timeout, "", "", std::string("error: ") + e.what(),
                 0.0);
        }
    });

    for (TaskOutput& out : outputs) {
        for (CampaignRecord& record : out.records) result.records.push_back(std::move(record));
        result.oracle_records.push_back(std::move(out.oracle_record));
        for (const std::vector<int>& tuple : out.agent_tuples) result.agent_coverage.insert_tuple(tuple);
        for (const std::vector<int>& tuple : out.oracle_tuples) result.oracle_coverage.insert_tuple(tuple);
    }
    return result;
}

AnomalyCounts count_anomalies(const std::vector<CampaignRecord>& records) {
    AnomalyCounts counts;
    std::set<std::string> signatures;
    for (const CampaignRecord& record : records) {
        if (record.kind != VerdictKind::agent_error && record.kind != VerdictKind::env_error) continue;
        ++counts.total;
        signatures.insert(record.anomaly_signature);
    }
    counts.unique = signatures.size();
    return counts;
}

CampaignSummary summarize(const CampaignResult& result) {
    CampaignSummary summary;
    std::map<std::uint64_t, SeedSummary> seeds;
    for (std::uint64_t seed : result.seeds) seeds[seed].seed = seed;

    std::set<std::string> seen_tasks;
    for (const CampaignRecord& record : result.records) {
        SeedSummary& per_seed = seeds[record.seed];
        bool first_record_of_task = seen_tasks.insert(record.task_id).second;
        if (first_record_of_task) {
            ++summary.tasks;
            ++per_seed.tasks;
            switch (record.oracle_verdict) {
                case SearchVerdict::feasible: ++summary.feasible, ++per_seed.feasible; break;
                case SearchVerdict::infeasible: ++summary.infeasible, ++per_seed.infeasible; break;
                default: ++summary.timeout, ++per_seed.timeout; break;
            }
        }
        if (record.agent_variant.empty()) continue;
        VariantSummary& variant = summary.per_variant[record.agent_variant];
        VariantSummary& seed_variant = per_seed.per_variant[record.agent_variant];
        if (record.kind == VerdictKind::pass) ++variant.pass, ++seed_variant.pass;
        if (record.kind == VerdictKind::agent_error) ++variant.agent_errors, ++seed_variant.agent_errors;
    }

    summary.anomalies = count_anomalies(result.records);
    for (auto& [_, seed_summary] : seeds) summary.per_seed.push_back(seed_summary);

    summary.coverage_dims = result.agent_coverage.dimension_count();
    summary.coverage_unique = result.agent_coverage.unique_bins();
    summary.coverage_fraction = result.agent_coverage.fraction_scientific();
    summary.oracle_coverage_unique = result.oracle_coverage.unique_bins();
    summary.oracle_coverage_fraction = result.oracle_coverage.fraction_scientific();
    return summary;
}

std::string record_to_json(const CampaignRecord& record, bool include_timing) {
    json j;
    j["task_id"] = record.task_id;
    j["config_id"] = record.config_id;
    j["seed"] = record.seed;
    j["agent_variant"] = record.agent_variant;
    j["kind"] = std::string(verdict_kind_name(record.kind));
    j["oracle_verdict"] = std::string(verdict_name(record.oracle_verdict));
    j["agent_status"] = record.agent_status;
    j["anomaly_signature"] = record.anomaly_signature;
    if (!record.note.empty()) j["note"] = record.note;
    if (include_timing) j["timing"] = {{"wall_ms", record.wall_ms}};
    return j.dump();
}

std::string oracle_record_to_json(const OracleRecord& record, bool include_timing) {
    json j;
    j["task_id"] = record.task_id;
    j["verdict"] = std::string(verdict_name(record.verdict));
    j["plan"] = record.plan;
    j["nodes_expanded"] = record.nodes_expanded;
    j["sim_steps"] = record.sim_steps;
    j["seed"] = record.seed;
    j["search_verdict"] = std::string(verdict_name(record.search_verdict));
    j["bfs_ran"] = record.bfs_ran;
    if (record.bfs_ran) j["bfs_verdict"] = std::string(verdict_name(record.bfs_verdict));
    if (include_timing) j["timing"] = {{"wall_ms", record.wall_ms}};
    return j.dump();
}

std::optional<CampaignRecord> record_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        CampaignRecord record;
        record.task_id = j.at("task_id").get<std::string>();
        record.config_id = j.at("config_id").get<std::string>();
        record.seed = j.at("seed").get<std::uint64_t>();
        record.agent_variant = j.at("agent_variant").get<std::string>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "pass") record.kind = VerdictKind::pass;
        else if (kind == "agent_error") record.kind = VerdictKind::agent_error;
        else if (kind == "env_error") record.kind = VerdictKind::env_error;
        else if (kind == "undetermined") record.kind = VerdictKind::undetermined;
        else return std::nullopt;
        const std::string oracle = j.at("oracle_verdict").get<std::string>();
        if (oracle == "feasible") record.oracle_verdict = SearchVerdict::feasible;
        else if (oracle == "infeasible") record.oracle_verdict = SearchVerdict::infeasible;
        else if (oracle == "exhausted") record.oracle_verdict = SearchVerdict::exhausted;
        else if (oracle == "timeout") record.oracle_verdict = SearchVerdict::timeout;
        else return std::nullopt;
        record.agent_status = j.at("agent_status").get<std::string>();
        record.anomaly_signature = j.at("anomaly_signature").get<std::string>();
        if (j.contains("note")) record.note = j.at("note").get<std::string>();
        if (j.contains("timing")) record.wall_ms = j.at("timing").value("wall_ms", 0.0);
        return record;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::string summary_to_json(const CampaignSummary& summary) {
    json j;
    j["tasks"] = summary.tasks;
    j["feasible"] = summary.feasible;
    j["infeasible"] = summary.infeasible;
    j["timeout"] = summary.timeout;
    json variants = json::object();
    for (const auto& [name, v] : summary.per_variant)
        variants[name] = {{"pass", v.pass}, {"agent_errors", v.agent_errors}};
    j["per_variant"] = variants;
    j["anomalies"] = {{"total", summary.anomalies.total}, {"unique", summary.anomalies.unique}};
    json per_seed = json::array();
    for (const SeedSummary& s : summary.per_seed) {
        json row;
        row["seed"] = s.seed;
        row["tasks"] = s.tasks;
        row["feasible"] = s.feasible;
        row["infeasible"] = s.infeasible;
        row["timeout"] = s.timeout;
        json sv = json::object();
        for (const auto& [name, v] : s.per_variant) sv[name] = {{"pass", v.pass}, {"agent_errors", v.agent_errors}};
        row["per_variant"] = sv;
        per_seed.push_back(row);
    }
    j["per_seed"] = per_seed;
    j["coverage"] = {{"dims", summary.coverage_dims},
                     {"unique_bins", summary.coverage_unique},
                     {"fraction", summary.coverage_fraction}};
    j["oracle_coverage"] = {{"unique_bins", summary.oracle_coverage_unique},
                            {"fraction", summary.oracle_coverage_fraction}};
    return j.dump(2) + "\n";
}

std::string summary_to_csv(const CampaignSummary& summary, const std::vector<std::string>& variants) {
    std::string out = "seed,tasks,feasible,infeasible,timeout";
    for (const std::string& variant : variants) out += "," + variant;
    out += "\n";
    auto row = [&](const std::string& label, std::size_t tasks, std::size_t feasible, std::size_t infeasible,
                   std::size_t timeout, const std::map<std::string, VariantSummary>& per_variant) {
        out += label + "," + std::to_string(tasks) + "," + std::to_string(feasible) + "," +
               std::to_string(infeasible) + "," + std::to_string(timeout);
        for (const std::string& variant : variants) {
            auto it = per_variant.find(variant);
            out += "," + std::to_string(it == per_variant.end() ? 0 : it->second.agent_errors);
        }
        out += "\n";
    };
    for (const SeedSummary& s : summary.per_seed)
        row(std::to_string(s.seed), s.tasks, s.feasible, s.infeasible, s.timeout, s.per_variant);
    row("all", summary.tasks, summary.feasible, summary.infeasible, summary.timeout, summary.per_variant);
    return out;
}

} // namespace aiprobe
