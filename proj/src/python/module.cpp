#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "casumm/errors.hpp"
#include "casumm/pipeline.hpp"

namespace py = pybind11;
using namespace casumm;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cascaded summarization core: selection, highlighting, fusion, ROUGE.";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericError");

    // corpus
    py::class_<Document>(m, "Document")
        .def(py::init<>())
        .def_readwrite("id", &Document::id)
        .def_readwrite("sentences", &Document::sentences)
        .def_readwrite("summary", &Document::summary);
    py::class_<Vocab>(m, "Vocab")
        .def("id", &Vocab::id)
        .def("token", &Vocab::token)
        .def("size", &Vocab::size)
        .def("save", &Vocab::save)
        .def_static("load", &Vocab::load);
    m.def("tokenize", &tokenize);
    m.def("lemmatize", &lemmatize);
    m.def("is_stopword", &is_stopword);
    m.def("is_punctuation", &is_punctuation);
    m.def("stopword_list_version", [] { return std::string(stopword_list_version()); });
    m.def("build_vocab", &build_vocab, py::arg("docs"), py::arg("max_size"));
    m.def("load_corpus", &load_corpus);
    m.def("save_corpus", &save_corpus);

    // rouge
    py::class_<RougeScore>(m, "RougeScore")
        .def_readonly("recall", &RougeScore::recall)
        .def_readonly("precision", &RougeScore::precision)
        .def_readonly("f1", &RougeScore::f1)
        .def("__repr__", [](const RougeScore& s) {
            return "RougeScore(recall=" + std::to_string(s.recall) +
                   ", precision=" + std::to_string(s.precision) +
                   ", f1=" + std::to_string(s.f1) + ")";
        });
    m.def("rouge_n", &rouge_n, py::arg("candidate"), py::arg("reference"), py::arg("n"));
    m.def("rouge_l", &rouge_l, py::arg("candidate"), py::arg("reference"));
    m.def("rouge_summary", &rouge_summary, py::arg("candidate_sentences"),
          py::arg("reference_sentences"));

    // oracle
    py::class_<Instance>(m, "Instance")
        .def(py::init<>())
        .def_readwrite("doc_id", &Instance::doc_id)
        .def_readwrite("sent_idx", &Instance::sent_idx)
        .def_readwrite("tokens", &Instance::tokens)
        .def_readwrite("label", &Instance::label)
        .def_readwrite("highlights", &Instance::highlights)
        .def_readwrite("target", &Instance::target);
    py::class_<Alignment>(m, "Alignment")
        .def_readonly("sent_idx", &Alignment::sent_idx)
        .def_readonly("score", &Alignment::score);
    m.def(
        "align_summary_sentence",
        [](const Document& doc, const std::vector<std::string>& ref, double pair_margin,
           int pair_window) {
            return align_summary_sentence(doc, ref, {pair_margin, pair_window});
        },
        py::arg("doc"), py::arg("ref_sentence"), py::arg("pair_margin") = 0.02,
        py::arg("pair_window") = 30);
    m.def("make_highlight_labels", &make_highlight_labels, py::arg("instance_tokens"),
          py::arg("ref_sentence"));
    m.def("smooth_labels", &smooth_labels, py::arg("mask"), py::arg("tokens"));
    m.def(
        "build_instances",
        [](const std::vector<Document>& docs, int negative_ratio, unsigned seed,
           double pair_margin, int pair_window) {
            return build_instances(docs, negative_ratio, seed, {pair_margin, pair_window});
        },
        py::arg("docs"), py::arg("negative_ratio") = 1, py::arg("seed") = 13,
        py::arg("pair_margin") = 0.02, py::arg("pair_window") = 30);
    m.def("save_instances", &save_instances);
    m.def("load_instances", &load_instances);

    // strategy
    py::enum_<StrategyKind>(m, "StrategyKind")
        .value("threshold", StrategyKind::threshold)
        .value("prop_instance", StrategyKind::prop_instance)
        .value("prop_document", StrategyKind::prop_document);
    py::class_<HighlightMask>(m, "HighlightMask")
        .def_readonly("bits", &HighlightMask::bits)
        .def_readonly("source", &HighlightMask::source)
        .def_readonly("parameter", &HighlightMask::parameter)
        .def("popcount", &HighlightMask::popcount);
    m.def("threshold_highlight", &threshold_highlight, py::arg("probs"), py::arg("tau"));
    m.def("proportional_highlight", &proportional_highlight, py::arg("prob_groups"),
          py::arg("rate"), py::arg("scope"));
    m.def("highlight_rate", &highlight_rate, py::arg("masks"));

    // models
    py::class_<SelectorConfig>(m, "SelectorConfig")
        .def(py::init<>())
        .def_readwrite("vocab_size", &SelectorConfig::vocab_size)
        .def_readwrite("layers", &SelectorConfig::layers)
        .def_readwrite("heads", &SelectorConfig::heads)
        .def_readwrite("d_model", &SelectorConfig::d_model)
        .def_readwrite("d_ff", &SelectorConfig::d_ff)
        .def_readwrite("max_len", &SelectorConfig::max_len);
    py::class_<FusionConfig>(m, "FusionConfig")
        .def(py::init<>())
        .def_readwrite("vocab_size", &FusionConfig::vocab_size)
        .def_readwrite("d_emb", &FusionConfig::d_emb)
        .def_readwrite("d_hid", &FusionConfig::d_hid)
        .def_readwrite("coverage", &FusionConfig::coverage);
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("checkpoint_path", &TrainConfig::checkpoint_path)
        .def_property(
            "lr", [](const TrainConfig& c) { return c.adam.lr; },
            [](TrainConfig& c, double lr) { c.adam.lr = lr; });
    py::class_<InstanceScore>(m, "InstanceScore")
        .def_readonly("p_sent", &InstanceScore::p_sent)
        .def_readonly("token_probs", &InstanceScore::token_probs);
    py::class_<SelectorModel>(m, "SelectorModel")
        .def("save", &SelectorModel::save)
        .def_static("load", &SelectorModel::load);
    py::class_<FusionModel>(m, "FusionModel")
        .def("save", &FusionModel::save)
        .def_static("load", &FusionModel::load);
    m.def("train_selector",
          [](const std::vector<Instance>& instances, const Vocab& vocab,
             const SelectorConfig& config, const TrainConfig& train) {
              return train_selector(instances, vocab, config, train);
          });
    m.def("train_fusion",
          [](const std::vector<Instance>& instances, const Vocab& vocab,
             const FusionConfig& config, const TrainConfig& train) {
              return train_fusion(instances, vocab, config, train);
          });
    m.def("score_instance", &score_instance, py::arg("instance"), py::arg("model"),
          py::arg("vocab"));
    py::class_<RankedInstance>(m, "RankedInstance")
        .def_readonly("instance", &RankedInstance::instance)
        .def_readonly("p_sent", &RankedInstance::p_sent);
    m.def(
        "rank_instances",
        [](const Document& doc, const SelectorModel& model, const Vocab& vocab, int k) {
            return rank_instances(doc, model, vocab, k);
        },
        py::arg("doc"), py::arg("model"), py::arg("vocab"), py::arg("k") = 4);
    py::class_<GenerationResult>(m, "GenerationResult")
        .def_readonly("tokens", &GenerationResult::tokens)
        .def_readonly("score", &GenerationResult::score);
    m.def(
        "generate",
        [](const Instance& instance, const std::vector<int>& highlight_bits,
           const FusionModel& model, const Vocab& vocab, int beam_width, int max_len) {
            return generate(instance, highlight_bits, model, vocab, beam_width, max_len);
        },
        py::arg("instance"), py::arg("highlight_bits"), py::arg("model"), py::arg("vocab"),
        py::arg("beam_width") = 4, py::arg("max_len") = 40);

    // pipeline
    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("k", &RunConfig::k)
        .def_readwrite("strategy", &RunConfig::strategy)
        .def_readwrite("strategy_param", &RunConfig::strategy_param)
        .def_readwrite("beam_width", &RunConfig::beam_width)
        .def_readwrite("max_len", &RunConfig::max_len)
        .def_readwrite("seed", &RunConfig::seed);
    py::class_<ProvenanceEntry>(m, "ProvenanceEntry")
        .def_readonly("sent_idx", &ProvenanceEntry::sent_idx)
        .def_readonly("p_sent", &ProvenanceEntry::p_sent)
        .def_readonly("mask", &ProvenanceEntry::mask)
        .def_readonly("strategy", &ProvenanceEntry::strategy);
    py::class_<SummaryOutput>(m, "SummaryOutput")
        .def_readonly("doc_id", &SummaryOutput::doc_id)
        .def_readonly("sentences", &SummaryOutput::sentences)
        .def_readonly("provenance", &SummaryOutput::provenance);
    m.def("summarize", &summarize, py::arg("doc"), py::arg("selector"), py::arg("fusion"),
          py::arg("vocab"), py::arg("config"));
    m.def("extract_tag_summary", &extract_tag_summary, py::arg("doc"), py::arg("selector"),
          py::arg("vocab"), py::arg("config"));
    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("mean", &EvalResult::mean)
        .def_readonly("documents", &EvalResult::documents);
    m.def("evaluate", &evaluate, py::arg("docs"), py::arg("outputs"));
}
