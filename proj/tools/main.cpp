// Command-line surface for the cascaded summarization toolkit.
//
// Every subcommand reads one flat key=value config file (--config) plus any
// number of --set key=value overrides. Exit codes: 0 success, 1 usage or
// config error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "casumm/errors.hpp"
#include "casumm/pipeline.hpp"

using namespace casumm;

namespace {

struct CommandArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string mode;  // oracle-run only
};

RunConfig resolve_config(const CommandArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) config = load_run_config(args.config_path);
    for (const auto& entry : args.overrides) {
        auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got: " + entry);
        apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    return config;
}

const std::string& require_path(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("missing required config key: ") + key);
    return value;
}

std::vector<Document> load_corpus_for(const RunConfig& config) {
    return load_corpus(require_path(config.corpus, "corpus"));
}

Vocab load_vocab_for(const RunConfig& config) {
    return Vocab::load(require_path(config.vocab, "vocab"));
}

void cmd_build_oracle(const RunConfig& config) {
    auto docs = load_corpus_for(config);
    auto instances =
        build_instances(docs, config.negative_ratio, config.seed, config.oracle_options());
    save_instances(require_path(config.instances, "instances"), instances);
    long positives = 0;
    for (const auto& inst : instances) positives += inst.label;
    std::cout << "wrote " << instances.size() << " instances (" << positives << " positive) to "
              << config.instances << "\n";
    if (!config.vocab.empty()) {
        auto vocab = build_vocab(docs, config.vocab_size);
        vocab.save(config.vocab);
        std::cout << "wrote vocab of " << vocab.size() << " tokens to " << config.vocab << "\n";
    }
}

void cmd_train_selector(const RunConfig& config) {
    auto instances = load_instances(require_path(config.instances, "instances"));
    auto vocab = load_vocab_for(config);
    auto train = config.train_config(require_path(config.selector_ckpt, "selector_ckpt"));
    std::vector<EpochLog> log;
    auto model = train_selector(instances, vocab, config.selector_config(vocab.size()), train,
                                &log);
    model.save(config.selector_ckpt);
    if (!config.train_log.empty()) write_train_log(config.train_log, log);
    std::cout << "trained selector for " << train.epochs << " epochs; final loss "
              << log.back().loss << " accuracy " << log.back().accuracy << "; checkpoint "
              << config.selector_ckpt << "\n";
}

void cmd_train_fusion(const RunConfig& config) {
    auto all = load_instances(require_path(config.instances, "instances"));
    std::vector<Instance> positives;
    for (auto& inst : all)
        if (inst.label == 1) positives.push_back(std::move(inst));
    auto vocab = load_vocab_for(config);
    auto train = config.train_config(require_path(config.fusion_ckpt, "fusion_ckpt"));
    std::vector<EpochLog> log;
    auto model =
        train_fusion(positives, vocab, config.fusion_config(vocab.size()), train, &log);
    model.save(config.fusion_ckpt);
    if (!config.train_log.empty()) write_train_log(config.train_log, log);
    std::cout << "trained fusion on " << positives.size() << " positive instances for "
              << train.epochs << " epochs; final loss " << log.back().loss << "; checkpoint "
              << config.fusion_ckpt << "\n";
}

void cmd_summarize(const RunConfig& config) {
    auto docs = load_corpus_for(config);
    auto vocab = load_vocab_for(config);
    auto selector = SelectorModel::load(require_path(config.selector_ckpt, "selector_ckpt"));
    auto fusion = FusionModel::load(require_path(config.fusion_ckpt, "fusion_ckpt"));
    std::vector<SummaryOutput> outputs;
    for (const auto& doc : docs)
        outputs.push_back(summarize(doc, selector, fusion, vocab, config));
    save_summaries(require_path(config.output, "output"), outputs);
    std::cout << "wrote summaries for " << outputs.size() << " documents to " << config.output
              << "\n";
}

void cmd_extract_tag(const RunConfig& config) {
    auto docs = load_corpus_for(config);
    auto vocab = load_vocab_for(config);
    auto selector = SelectorModel::load(require_path(config.selector_ckpt, "selector_ckpt"));
    std::vector<SummaryOutput> outputs;
    for (const auto& doc : docs)
        outputs.push_back(extract_tag_summary(doc, selector, vocab, config));
    save_summaries(require_path(config.output, "output"), outputs);
    std::cout << "wrote tagged extractions for " << outputs.size() << " documents to "
              << config.output << "\n";
}

void cmd_oracle_run(const RunConfig& config, const std::string& mode_name) {
    auto mode = oracle_mode_from_name(mode_name);
    auto docs = load_corpus_for(config);
    auto vocab = load_vocab_for(config);
    std::optional<SelectorModel> selector;
    std::optional<FusionModel> fusion;
    if (mode == OracleMode::gt_sent_sys_tag)
        selector = SelectorModel::load(require_path(config.selector_ckpt, "selector_ckpt"));
    if (mode == OracleMode::gt_sent_gt_tag_fusion)
        fusion = FusionModel::load(require_path(config.fusion_ckpt, "fusion_ckpt"));
    std::vector<SummaryOutput> outputs;
    for (const auto& doc : docs)
        outputs.push_back(oracle_summarize(doc, mode, selector ? &*selector : nullptr,
                                           fusion ? &*fusion : nullptr, vocab, config));
    save_summaries(require_path(config.output, "output"), outputs);
    std::cout << "wrote " << mode_name << " outputs for " << outputs.size() << " documents to "
              << config.output << "\n";
}

void cmd_evaluate(const RunConfig& config) {
    auto docs = load_corpus_for(config);
    auto outputs = load_summaries(require_path(config.summaries, "summaries"));
    auto result = evaluate(docs, outputs);
    std::cout << render_eval_table(result);
    std::string csv = config.eval_csv.empty() ? "eval.csv" : config.eval_csv;
    write_eval_csv(csv, result);
    std::cout << "wrote " << csv << "\n";
}

void cmd_sweep(const RunConfig& config) {
    auto docs = load_corpus_for(config);
    auto vocab = load_vocab_for(config);
    auto selector = SelectorModel::load(require_path(config.selector_ckpt, "selector_ckpt"));
    auto fusion = FusionModel::load(require_path(config.fusion_ckpt, "fusion_ckpt"));
    auto grid = parse_grid(config.grid.empty() ? "0.05,0.1,0.15,0.2,0.3,0.5" : config.grid);
    auto strategies = parse_strategies(
        config.strategies.empty() ? "threshold,prop_instance,prop_document" : config.strategies);
    auto rows = sweep_thresholds(docs, selector, fusion, vocab, grid, strategies, config);
    write_sweep_csv(require_path(config.output, "output"), rows);
    std::cout << "wrote " << rows.size() << " sweep rows to " << config.output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascaded summarization: selection, highlighting, fusion"};
    app.require_subcommand(1);

    std::map<std::string, CommandArgs> args;
    auto add_command = [&](const std::string& name, const std::string& desc, bool with_mode) {
        auto* sub = app.add_subcommand(name, desc);
        auto& a = args[name];
        sub->add_option("--config", a.config_path, "run configuration file");
        sub->add_option("--set", a.overrides, "override a config key (key=value)");
        if (with_mode)
            sub->add_option("--mode", a.mode,
                            "gt_sent_sys_tag | gt_sent_gt_tag | gt_sent_gt_tag_fusion")
                ->required();
        return sub;
    };

    add_command("build-oracle", "construct training instances and the vocabulary", false);
    add_command("train-selector", "train the instance/token scoring model", false);
    add_command("train-fusion", "train the highlight-conditioned generator", false);
    add_command("summarize", "run the full cascade over a corpus", false);
    add_command("extract-tag", "tagging-only summaries without generation", false);
    add_command("oracle-run", "cascade variants with ground-truth selection/tags", true);
    add_command("evaluate", "score summaries against references", false);
    add_command("sweep", "highlight-strategy sweep over a parameter grid", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const auto& a = args[sub->get_name()];
            RunConfig config = resolve_config(a);
            if (sub->get_name() == "build-oracle") cmd_build_oracle(config);
            else if (sub->get_name() == "train-selector") cmd_train_selector(config);
            else if (sub->get_name() == "train-fusion") cmd_train_fusion(config);
            else if (sub->get_name() == "summarize") cmd_summarize(config);
            else if (sub->get_name() == "extract-tag") cmd_extract_tag(config);
            else if (sub->get_name() == "oracle-run") cmd_oracle_run(config, a.mode);
            else if (sub->get_name() == "evaluate") cmd_evaluate(config);
            else if (sub->get_name() == "sweep") cmd_sweep(config);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
