#pragma once

#include "aiprobe/coverage.hpp"
#include "aiprobe/oracle.hpp"
#include "aiprobe/registry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aiprobe {

enum class VerdictKind { pass, agent_error, env_error, undetermined };

std::string_view verdict_kind_name(VerdictKind kind);

struct Verdict {
    VerdictKind kind = VerdictKind::undetermined;
    SearchVerdict oracle_verdict = SearchVerdict::timeout;
    std::optional<AgentTrace::Terminal> agent_status;
    std::string anomaly_signature; // filled for agent/env errors by the campaign
};

// Differential classification of one task: the oracle's verdict against the
// observed agent run. The agent trace may be absent when the oracle already
// proved the task infeasible.
Verdict classify(const OracleOutcome& oracle, const AgentTrace* trace);

// Bin combination of a configuration's env-level mutable attributes under
// their per-config resolved bounds (EnvError signatures).
std::vector<int> config_bin_tuple(const EnvironmentConfig& config, int bins);

struct CampaignRecord {
    std::string task_id;
    std::string config_id;
    std::uint64_t seed = 0;
    std::string agent_variant; // empty for task-level (env error / undetermined) records
    VerdictKind kind = VerdictKind::undetermined;
    SearchVerdict oracle_verdict = SearchVerdict::timeout;
    std::string agent_status; // terminal status name, empty when the agent did not run
    std::string anomaly_signature;
    std::string note;          // error notes for undetermined records
    double wall_ms = 0.0;      // timing section, optional in serialized form
};

struct OracleRecord {
    std::string task_id;
    SearchVerdict verdict = SearchVerdict::timeout;
    std::vector<std::string> plan; // action symbols when feasible
    std::uint64_t nodes_expanded = 0;
    std::uint64_t sim_steps = 0;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;
    SearchVerdict search_verdict = SearchVerdict::exhausted; // heuristic engine alone
    bool bfs_ran = false;
    SearchVerdict bfs_verdict = SearchVerdict::timeout;
};

struct CampaignParams {
    int configs_per_seed = 100; // b
    int tasks_per_config = 100;
    SearchParams oracle;
    std::uint64_t max_steps = 0; // 0: use the domain default per task
    int workers = 1;
    std::vector<std::string> agent_variants; // empty: every variant the domain registers
};

struct CampaignResult {
    std::vector<CampaignRecord> records;      // deterministic (seed, config, task, variant) order
    std::vector<OracleRecord> oracle_records; // deterministic (seed, config, task) order
    CoverageLedger agent_coverage;            // states visited by agent traces
    CoverageLedger oracle_coverage;           // states visited by oracle simulations, kept separate
    std::vector<std::string> variants;
    std::vector<std::uint64_t> seeds;
};

// The generation phase on its own, so `generate` emits byte-identical
// configs and tasks to the ones a `run` with the same spec evaluates.
struct GeneratedCampaign {
    struct ConfigTasks {
        std::shared_ptr<const EnvironmentConfig> config;
        std::vector<Task> tasks;
    };
    struct SeedBatch {
        std::uint64_t seed = 0;
        std::vector<ConfigTasks> configs;
    };
    std::vector<SeedBatch> seeds;
};

GeneratedCampaign generate_campaign(const EnvironmentTemplate& tmpl, int configs_per_seed, int tasks_per_config,
                                    const std::vector<std::uint64_t>& seeds);

// Generation -> oracle -> agents -> classification for every seed. The
// oracle runs once per task and its verdict is shared by all agent
// variants; agents run only on feasible tasks. A failure inside one task
// yields an undetermined record and the campaign continues.
CampaignResult run_campaign(const EnvironmentTemplate& tmpl, const CampaignParams& params,
                            const std::vector<std::uint64_t>& seeds);

struct AnomalyCounts {
    std::size_t total = 0;
    std::size_t unique = 0;
};

AnomalyCounts count_anomalies(const std::vector<CampaignRecord>& records);

struct VariantSummary {
    std::size_t pass = 0;
    std::size_t agent_errors = 0;
};

struct SeedSummary {
    std::uint64_t seed = 0;
    std::size_t tasks = 0;
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    std::size_t timeout = 0;
    std::map<std::string, VariantSummary> per_variant;
};

struct CampaignSummary {
    std::size_t tasks = 0;
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    std::size_t timeout = 0;
    std::map<std::string, VariantSummary> per_variant;
    AnomalyCounts anomalies;
    std::vector<SeedSummary> per_seed;
    std::size_t coverage_dims = 0;
    std::size_t coverage_unique = 0;
    std::string coverage_fraction;
    std::size_t oracle_coverage_unique = 0;
    std::string oracle_coverage_fraction;
};

CampaignSummary summarize(const CampaignResult& result);

// --- serialization -----------------------------------------------------------

std::string record_to_json(const CampaignRecord& record, bool include_timing);
std::string oracle_record_to_json(const OracleRecord& record, bool include_timing);

// Parses one records line; returns std::nullopt on malformed input.
std::optional<CampaignRecord> record_from_json(const std::string& line);

std::string summary_to_json(const CampaignSummary& summary);

// Table of per-seed results: seed, feasible, infeasible, timeout, then one
// agent-error column per variant.
std::string summary_to_csv(const CampaignSummary& summary, const std::vector<std::string>& variants);

} // namespace aiprobe
