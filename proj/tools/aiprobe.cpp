#include "aiprobe/attribution.hpp"
#include "aiprobe/errors.hpp"
#include "aiprobe/registry.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

    constexpr int kExitConfig = 2;
    constexpr int kExitIo = 3;

    struct CliError {
        int code;
        std::string message;
    };

    std::string read_file(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw CliError{kExitIo, "cannot read " + path.string()};
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }

    void write_file(const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw CliError{kExitIo, "cannot write " + path.string()};
        out << content;
        if (!out) throw CliError{kExitIo, "write failed for " + path.string()};
    }

    std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
        std::vector<std::uint64_t> seeds;
        std::stringstream stream(text);
        std::string token;
        while (std::getline(stream, token, ',')) {
            if (token.empty()) continue;
            try {
                seeds.push_back(std::stoull(token));
            } catch (const std::exception&) {
                throw CliError{kExitConfig, "bad seed '" + token + "'"};
            }
        }
        if (seeds.empty()) throw CliError{kExitConfig, "no seeds given"};
        return seeds;
    }

    struct CommonOptions {
        std::string template_path;
        std::string domain;
        std::string agents = "";
        int bins = 100;
        int tasks_per_config = 100;
        std::string seeds = "1";
        int oracle_n = 5;
        int oracle_depth = 50;
        double task_timeout = 10.0;
        std::uint64_t search_steps = 200'000;
        std::uint64_t bfs_steps = 2'000'000;
        std::uint64_t max_steps = 0;
        int workers = 1;
        std::string out_dir = "out";
        bool omit_timing = false;
    };

    void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool with_run_flags) {
        cmd->add_option("--template", opt.template_path, "Environment template XML")->required();
        cmd->add_option("--domain", opt.domain, "Expected domain name (validated against the template)");
        cmd->add_option("--bins", opt.bins, "Configurations per seed / LHS bins (b)");
        cmd->add_option("--tasks-per-config", opt.tasks_per_config, "Tasks drawn per configuration");
        cmd->add_option("--seeds", opt.seeds, "Comma-separated seed list");
        cmd->add_option("--out", opt.out_dir, "Output directory");
        if (with_run_flags) {
            cmd->add_option("--agents", opt.agents, "Comma-separated agent variants (default: all)");
            cmd->add_option("--oracle-n", opt.oracle_n, "Candidate action sequences per search node (N)");
            cmd->add_option("--oracle-depth", opt.oracle_depth, "Maximum search recursion depth (D)");
            cmd->add_option("--task-timeout", opt.task_timeout, "Wall-clock guard per oracle phase, seconds");
            cmd->add_option("--search-steps", opt.search_steps, "Simulator-step budget for the heuristic search");
            cmd->add_option("--bfs-steps", opt.bfs_steps, "Simulator-step budget for the BFS verifier");
            cmd->add_option("--max-steps", opt.max_steps, "Agent step limit (0: domain default)");
            cmd->add_option("--workers", opt.workers, "Worker threads");
            cmd->add_flag("--omit-timing", opt.omit_timing, "Leave timing sections out of the record files");
        }
    }

    std::vector<std::uint64_t> resolve_seeds(const CommonOptions& opt) {
        if (const char* env = std::getenv("AIPROBE_SEED"); env && *env) return parse_seed_list(env);
        return parse_seed_list(opt.seeds);
    }

    aiprobe::EnvironmentTemplate load_template(const CommonOptions& opt) {
        aiprobe::EnvironmentTemplate tmpl;
        try {
            tmpl = aiprobe::parse_template(read_file(opt.template_path));
        } catch (const aiprobe::ParseError& e) {
            throw CliError{kExitConfig, opt.template_path + ": " + e.what()};
        }
        const aiprobe::DomainPlugin* plugin = aiprobe::domain_registry().find(tmpl.env_type);
        if (!plugin)
            throw CliError{kExitConfig, "template has environment type '" + tmpl.env_type +
                                            "' but no such domain is registered"};
        if (!opt.domain.empty() && opt.domain != tmpl.env_type)
            throw CliError{kExitConfig, "--domain " + opt.domain + " does not match template type '" +
                                            tmpl.env_type + "'"};
        return tmpl;
    }

    std::vector<std::string> resolve_variants(const CommonOptions& opt, const aiprobe::EnvironmentTemplate& tmpl) {
        const aiprobe::DomainPlugin& plugin = aiprobe::domain_registry().require(tmpl.env_type);
        std::vector<std::string> known = plugin.agent_variants();
        if (opt.agents.empty()) return known;
        std::vector<std::string> out;
        std::stringstream stream(opt.agents);
        std::string token;
        while (std::getline(stream, token, ',')) {
            if (token.empty()) continue;
            if (std::find(known.begin(), known.end(), token) == known.end())
                throw CliError{kExitConfig, "unknown agent variant '" + token + "' for domain " + tmpl.env_type};
            out.push_back(token);
        }
        if (out.empty()) throw CliError{kExitConfig, "no agent variants selected"};
        return out;
    }

    aiprobe::CampaignParams campaign_params(const CommonOptions& opt, const std::vector<std::string>& variants) {
        aiprobe::CampaignParams params;
        params.configs_per_seed = opt.bins;
        params.tasks_per_config = opt.tasks_per_config;
        params.oracle.bins = 100;
        params.oracle.paths_per_iteration = opt.oracle_n;
        params.oracle.max_depth = opt.oracle_depth;
        params.oracle.search_step_budget = opt.search_steps;
        params.oracle.bfs_step_budget = opt.bfs_steps;
        params.oracle.time_budget =
            std::chrono::milliseconds(static_cast<std::int64_t>(opt.task_timeout * 1000.0));
        params.max_steps = opt.max_steps;
        params.workers = opt.workers;
        params.agent_variants = variants;
        return params;
    }

    int cmd_generate(const CommonOptions& opt) {
        aiprobe::EnvironmentTemplate tmpl = load_template(opt);
        std::vector<std::uint64_t> seeds = resolve_seeds(opt);
        if (opt.bins < 1 || opt.tasks_per_config < 1)
            throw CliError{kExitConfig, "--bins and --tasks-per-config must be positive"};

        aiprobe::GeneratedCampaign campaign =
            aiprobe::generate_campaign(tmpl, opt.bins, opt.tasks_per_config, seeds);

        fs::path out_dir(opt.out_dir);
        std::error_code ec;
        fs::create_directories(out_dir / "configs", ec);
        fs::create_directories(out_dir / "tasks", ec);
        if (ec) throw CliError{kExitIo, "cannot create " + out_dir.string()};

        json manifest;
        manifest["domain"] = tmpl.env_type;
        manifest["template"] = opt.template_path;
        manifest["bins"] = opt.bins;
        manifest["tasks_per_config"] = opt.tasks_per_config;
        json seed_entries = json::array();
        std::size_t task_count = 0;
        for (const auto& batch : campaign.seeds) {
            json seed_entry;
            seed_entry["seed"] = batch.seed;
            json config_entries = json::array();
            for (const auto& entry : batch.configs) {
                const std::string& config_id = entry.config->config_id;
                fs::path config_path = fs::path("configs") / (config_id + ".xml");
                write_file(out_dir / config_path, aiprobe::serialize_config(*entry.config));
                fs::create_directories(out_dir / "tasks" / config_id, ec);
                if (ec) throw CliError{kExitIo, "cannot create task directory for " + config_id};
                json config_entry;
                config_entry["config_id"] = config_id;
                config_entry["path"] = config_path.generic_string();
                json task_entries = json::array();
                for (const aiprobe::Task& task : entry.tasks) {
                    fs::path task_path = fs::path("tasks") / config_id / (task.task_id + ".xml");
                    write_file(out_dir / task_path, aiprobe::serialize_task(task));
                    task_entries.push_back({{"task_id", task.task_id}, {"path", task_path.generic_string()}});
                    ++task_count;
                }
                config_entry["tasks"] = task_entries;
                config_entries.push_back(config_entry);
            }
            seed_entry["configs"] = config_entries;
            seed_entries.push_back(seed_entry);
        }
        manifest["seeds"] = seed_entries;
        write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
        std::cout << "wrote " << task_count << " tasks under " << out_dir.string() << "\n";
        return 0;
    }

    int cmd_run(const CommonOptions& opt) {
        aiprobe::EnvironmentTemplate tmpl = load_template(opt);
        std::vector<std::uint64_t> seeds = resolve_seeds(opt);
        std::vector<std::string> variants = resolve_variants(opt, tmpl);
        if (opt.bins < 1 || opt.tasks_per_config < 1 || opt.workers < 1)
            throw CliError{kExitConfig, "--bins, --tasks-per-config, and --workers must be positive"};

        aiprobe::CampaignResult result = aiprobe::run_campaign(tmpl, campaign_params(opt, variants), seeds);
        aiprobe::CampaignSummary summary = aiprobe::summarize(result);

        fs::path out_dir(opt.out_dir);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw CliError{kExitIo, "cannot create " + out_dir.string()};

        std::string records;
        for (const aiprobe::CampaignRecord& record : result.records)
            records += aiprobe::record_to_json(record, !opt.omit_timing) + "\n";
        write_file(out_dir / "records.jsonl", records);

        std::string oracle_records;
        for (const aiprobe::OracleRecord& record : result.oracle_records)
            oracle_records += aiprobe::oracle_record_to_json(record, !opt.omit_timing) + "\n";
        write_file(out_dir / "oracle.jsonl", oracle_records);

        write_file(out_dir / "summary.json", aiprobe::summary_to_json(summary));
        write_file(out_dir / "table.csv", aiprobe::summary_to_csv(summary, result.variants));

        std::cout << "tasks " << summary.tasks << ": feasible " << summary.feasible << ", infeasible "
                  << summary.infeasible << ", timeout " << summary.timeout << "\n";
        for (const std::string& variant : result.variants) {
            const aiprobe::VariantSummary& v = summary.per_variant[variant];
            std::cout << "  " << variant << ": pass " << v.pass << ", agent_errors " << v.agent_errors << "\n";
        }
        std::cout << "anomalies: total " << summary.anomalies.total << ", unique " << summary.anomalies.unique
                  << "\n";
        std::cout << "state coverage: " << summary.coverage_fraction << " (" << summary.coverage_unique << " bins, D="
                  << summary.coverage_dims << ")\n";
        return 0;
    }

    int cmd_report(const std::string& records_path) {
        std::ifstream in(records_path);
        if (!in) throw CliError{kExitIo, "cannot read " + records_path};

        std::vector<aiprobe::CampaignRecord> records;
        std::set<std::pair<std::string, std::string>> keys;
        std::size_t malformed = 0, duplicates = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::optional<aiprobe::CampaignRecord> record = aiprobe::record_from_json(line);
            if (!record) {
                ++malformed;
                continue;
            }
            if (!keys.insert({record->task_id, record->agent_variant}).second) {
                ++duplicates;
                continue;
            }
            records.push_back(std::move(*record));
        }

        aiprobe::CampaignResult result;
        std::set<std::uint64_t> seed_set;
        std::set<std::string> variant_set;
        for (const aiprobe::CampaignRecord& record : records) {
            seed_set.insert(record.seed);
            if (!record.agent_variant.empty()) variant_set.insert(record.agent_variant);
        }
        result.seeds.assign(seed_set.begin(), seed_set.end());
        result.variants.assign(variant_set.begin(), variant_set.end());
        result.records = std::move(records);
        aiprobe::CampaignSummary summary = aiprobe::summarize(result);

        std::cout << "records: " << result.records.size();
        if (malformed) std::cout << " (skipped " << malformed << " malformed)";
        if (duplicates) std::cout << " (skipped " << duplicates << " duplicates)";
        std::cout << "\n";
        std::cout << "tasks " << summary.tasks << ": feasible " << summary.feasible << ", infeasible "
                  << summary.infeasible << ", timeout " << summary.timeout << "\n\n";
        std::cout << aiprobe::summary_to_csv(summary, result.variants);
        return 0;
    }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Black-box differential testing for goal-directed agents"};
    app.require_subcommand(1);

    CommonOptions generate_opt, run_opt;
    std::string records_path;

    CLI::App* generate = app.add_subcommand("generate", "Sample environment configurations and tasks to XML files");
    add_common_flags(generate, generate_opt, /*with_run_flags=*/false);

    CLI::App* run = app.add_subcommand("run", "Generate, solve with the oracle, evaluate agents, and write records");
    add_common_flags(run, run_opt, /*with_run_flags=*/true);

    CLI::App* report = app.add_subcommand("report", "Summarize an existing records file");
    report->add_option("--records", records_path, "records.jsonl produced by run")->required();

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(generate_opt);
        if (run->parsed()) return cmd_run(run_opt);
        if (report->parsed()) return cmd_report(records_path);
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfig : 0;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const aiprobe::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
