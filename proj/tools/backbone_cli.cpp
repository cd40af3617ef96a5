// Command-line front end: null-model fitting, validated projections,
// backbone extraction, community detection, core-periphery scores, and the
// reporting pipeline over interaction logs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "backbone/bicm.hpp"
#include "backbone/community.hpp"
#include "backbone/error.hpp"
#include "backbone/graph.hpp"
#include "backbone/ingest.hpp"
#include "backbone/projection.hpp"
#include "backbone/report.hpp"
#include "backbone/rng.hpp"
#include "backbone/scores.hpp"
#include "backbone/synth.hpp"

namespace fs = std::filesystem;
using namespace backbone;

namespace {

std::ofstream open_out(const std::string& path) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

FitConfig fit_config(double tol, int max_iter, const std::string& method, double damping) {
    FitConfig cfg;
    cfg.tolerance = tol;
    cfg.max_iterations = max_iter;
    cfg.damping = damping;
    if (method == "fixed-point") {
        cfg.method = FitMethod::fixed_point;
    } else if (method == "quasi-newton") {
        cfg.method = FitMethod::quasi_newton;
    } else {
        throw InputError("unknown fit method: " + method);
    }
    return cfg;
}

Layer parse_layer(const std::string& name) {
    if (name == "rows") return Layer::rows;
    if (name == "columns" || name == "cols") return Layer::columns;
    throw InputError("layer must be rows or columns");
}

std::unordered_map<NodeId, int> load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::unordered_map<NodeId, int> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw InputError("malformed partition line: " + line);
        out[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    }
    return out;
}

std::unordered_map<NodeId, Category> load_categories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::unordered_map<NodeId, Category> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw InputError("malformed category line: " + line);
        const std::string name = line.substr(tab + 1);
        Category cat;
        if (name == "verified") cat = Category::verified;
        else if (name == "suspended") cat = Category::suspended;
        else if (name == "bot") cat = Category::bot;
        else if (name == "genuine") cat = Category::genuine;
        else throw InputError("unknown category: " + name);
        out[line.substr(0, tab)] = cat;
    }
    return out;
}

std::vector<int> labels_for_graph(const Graph& g,
                                  const std::unordered_map<NodeId, int>& partition) {
    std::vector<int> labels(g.n_nodes());
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        auto it = partition.find(g.node_id(i));
        if (it == partition.end()) {
            throw InputError("partition is missing node " + g.node_id(i));
        }
        labels[i] = it->second;
    }
    return labels;
}

void write_scores_table(std::ostream& out, const std::string& day,
                        const std::vector<NodeScores>& scores,
                        const std::unordered_map<NodeId, Category>& categories) {
    char buf[64];
    for (const auto& s : scores) {
        auto it = categories.find(s.id);
        const char* cat = it == categories.end() ? "genuine" : category_name(it->second);
        std::snprintf(buf, sizeof(buf), "%.12g\t%.12g", s.participation, s.relevance);
        out << day << '\t' << s.id << '\t' << cat << '\t' << s.community << '\t' << s.degree
            << '\t' << s.in_community_degree << '\t' << buf << '\n';
    }
}

void write_ks_rows(std::ostream& out, const std::string& day, const CategoryScoreReport& rep) {
    char buf[64];
    for (const auto& pair : rep.pairs) {
        std::snprintf(buf, sizeof(buf), "%.12g\t%.12g", pair.ks.statistic, pair.ks.p_value);
        out << day << '\t' << pair.name << '\t' << buf << '\n';
    }
}

// Retweet pairs of one day's records.
std::vector<IdEdge> retweet_pairs(const std::vector<InteractionRecord>& records,
                                  const std::vector<std::size_t>& indices) {
    std::vector<IdEdge> pairs;
    for (std::size_t idx : indices) {
        const auto& r = records[idx];
        if (r.kind == InteractionKind::retweet) pairs.emplace_back(r.actor_id, r.target_id);
    }
    return pairs;
}

struct ReportConfig {
    std::string interactions, profiles, out_dir = ".";
    double cap_threshold = 0.43;
    std::optional<double> cap_percentile;
    std::int64_t utc_offset = 0;
    double fdr_t = 0.05;
    std::uint64_t seed = 1;
    std::optional<std::string> window_start, window_end;
    std::string entity = "hashtag";
    std::size_t top_k = 10;
    std::vector<std::string> accounts;
    int louvain_restarts = 10;
    int label_runs = 1000;
};

ReportConfig load_report_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid config: ") + e.what());
    }
    ReportConfig cfg;
    cfg.interactions = j.value("interactions", "");
    cfg.profiles = j.value("profiles", "");
    cfg.out_dir = j.value("out_dir", ".");
    cfg.cap_threshold = j.value("cap_threshold", 0.43);
    if (j.contains("cap_percentile") && !j["cap_percentile"].is_null()) {
        cfg.cap_percentile = j["cap_percentile"].get<double>();
    }
    cfg.utc_offset = j.value("utc_offset", 0);
    cfg.fdr_t = j.value("fdr_t", 0.05);
    cfg.seed = j.value("seed", 1);
    if (j.contains("window_start")) cfg.window_start = j["window_start"].get<std::string>();
    if (j.contains("window_end")) cfg.window_end = j["window_end"].get<std::string>();
    cfg.entity = j.value("entity", "hashtag");
    cfg.top_k = j.value("top_k", 10);
    if (j.contains("accounts")) cfg.accounts = j["accounts"].get<std::vector<std::string>>();
    cfg.louvain_restarts = j.value("louvain_restarts", 10);
    cfg.label_runs = j.value("label_runs", 1000);
    if (cfg.interactions.empty() || cfg.profiles.empty()) {
        throw InputError("config must name interactions and profiles files");
    }
    return cfg;
}

struct LoadedData {
    InteractionLog log;
    ProfileSet profiles;
    std::unordered_map<NodeId, Category> categories;
    double cap_threshold_used = 0.43;
};

LoadedData load_data(const ReportConfig& cfg) {
    LoadedData d;
    d.log = parse_interactions(cfg.interactions);
    d.profiles = parse_profiles(cfg.profiles);
    d.cap_threshold_used = cfg.cap_threshold;
    if (cfg.cap_percentile) {
        std::vector<double> caps;
        for (const auto& p : d.profiles.profiles) {
            if (!p.verified && !p.suspended && p.automation_score) {
                caps.push_back(*p.automation_score);
            }
        }
        if (caps.empty()) throw InputError("no automation scores for percentile threshold");
        d.cap_threshold_used = percentile_threshold(caps, *cfg.cap_percentile);
    }
    d.categories = categorize_all(d.log.records, d.profiles, d.cap_threshold_used);
    return d;
}

ReportMeta make_meta(const std::string& kind, const ReportConfig& cfg, const LoadedData& d) {
    ReportMeta meta;
    meta.kind = kind;
    meta.window_start = cfg.window_start;
    meta.window_end = cfg.window_end;
    meta.cap_threshold = d.cap_threshold_used;
    meta.cap_percentile = cfg.cap_percentile;
    meta.fdr_t = cfg.fdr_t;
    meta.utc_offset = cfg.utc_offset;
    meta.seed = cfg.seed;
    meta.n_records = d.log.records.size();
    meta.n_users = d.categories.size();
    return meta;
}

std::set<NodeId> validated_users_of(const std::vector<InteractionRecord>& records,
                                    const std::unordered_map<NodeId, Category>& categories,
                                    Category filter, EntityKind entity, double t) {
    std::set<NodeId> out;
    BipartiteGraph bg;
    try {
        bg = entity_bipartite(records, categories, filter, entity);
    } catch (const InputError&) {
        return out;  // no users of the category
    }
    auto model = fit_bicm(bg);
    ProjectionConfig pcfg;
    pcfg.t = t;
    auto proj = validated_projection(bg, model, Layer::rows, pcfg);
    for (const auto& id : proj.graph.node_ids()) out.insert(id);
    return out;
}

int run_report(const std::string& kind, const std::string& config_path) {
    const ReportConfig cfg = load_report_config(config_path);
    const LoadedData data = load_data(cfg);
    fs::create_directories(cfg.out_dir);
    const auto out_path = [&cfg](const std::string& name) {
        return (fs::path(cfg.out_dir) / name).string();
    };

    if (kind == "presence") {
        auto slices = daily_slices(data.log.records, cfg.utc_offset, cfg.window_start,
                                   cfg.window_end);
        auto series = presence_series(data.log.records, slices, data.categories);
        write_report(out_path("presence.csv"), series.to_csv(), make_meta(kind, cfg, data));
    } else if (kind == "crosstab") {
        auto matrix = crosstab_interactions(data.log.records, data.categories);
        write_report(out_path("crosstab.csv"), matrix.to_csv(), make_meta(kind, cfg, data));
    } else if (kind == "entities") {
        const EntityKind ek = cfg.entity == "url" ? EntityKind::url : EntityKind::hashtag;
        auto ranking = top_entities(data.log.records, data.categories, ek, cfg.top_k);
        write_report(out_path("entities.csv"), ranking.to_csv(), make_meta(kind, cfg, data));
    } else if (kind == "retweeters") {
        if (cfg.accounts.empty()) throw InputError("retweeters report needs accounts");
        auto comp = retweeter_composition(data.log.records, data.categories, cfg.accounts,
                                          cfg.utc_offset);
        for (const auto& w : comp.warnings) std::cerr << "warning: " << w << '\n';
        write_report(out_path("retweeters.csv"), comp.to_csv(), make_meta(kind, cfg, data));
    } else if (kind == "composition") {
        DiscursiveConfig dcfg;
        dcfg.t = cfg.fdr_t;
        dcfg.louvain_restarts = cfg.louvain_restarts;
        dcfg.label_runs = cfg.label_runs;
        dcfg.seed = cfg.seed;
        auto disc = discursive_communities(data.log.records, data.profiles, dcfg);

        std::unordered_map<NodeId, int> membership;
        for (const auto& [id, label] : disc.labels.labels) {
            if (label != DiscursiveLabels::kUnassigned) membership[id] = label;
        }
        ValidatedUserSets validated;
        const EntityKind ek = cfg.entity == "url" ? EntityKind::url : EntityKind::hashtag;
        validated.bots = validated_users_of(data.log.records, data.categories, Category::bot,
                                            ek, cfg.fdr_t);
        validated.suspended = validated_users_of(data.log.records, data.categories,
                                                 Category::suspended, ek, cfg.fdr_t);

        std::vector<IdEdge> pairs;
        for (const auto& r : data.log.records) {
            if (r.kind == InteractionKind::retweet) pairs.emplace_back(r.actor_id, r.target_id);
        }
        auto retweet_graph = Graph::from_edges(pairs);
        auto comp = community_composition(membership, data.categories, validated, retweet_graph,
                                          data.log.records, cfg.top_k);
        write_report(out_path("composition.csv"), comp.to_csv(), make_meta(kind, cfg, data));
        disc.labels.save(out_path("membership.tsv"));
    } else {
        throw InputError("unknown report kind: " + kind);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"entropy-based bipartite null models, validated projections and "
                 "coordination reports"};
    app.require_subcommand(1);

    // fit
    std::string fit_graph, fit_out, fit_method = "fixed-point";
    double fit_tol = 1e-10, fit_damping = 0.5;
    int fit_max_iter = 10000;
    auto* fit_cmd = app.add_subcommand("fit", "fit the bipartite configuration model");
    fit_cmd->add_option("--graph", fit_graph, "bipartite edge list (row<TAB>col)")->required();
    fit_cmd->add_option("--out", fit_out, "model output path (json)")->required();
    fit_cmd->add_option("--tol", fit_tol, "max absolute degree residual");
    fit_cmd->add_option("--max-iter", fit_max_iter, "iteration cap");
    fit_cmd->add_option("--method", fit_method, "fixed-point | quasi-newton");
    fit_cmd->add_option("--damping", fit_damping, "fixed-point step mixing in (0,1]");

    // project
    std::string proj_graph, proj_model, proj_layer = "rows", proj_out;
    double proj_t = 0.05;
    int proj_threads = 1;
    auto* proj_cmd = app.add_subcommand("project", "statistically validated projection");
    proj_cmd->add_option("--graph", proj_graph)->required();
    proj_cmd->add_option("--model", proj_model, "fitted model (fit is rerun when omitted)");
    proj_cmd->add_option("--layer", proj_layer, "rows | columns");
    proj_cmd->add_option("--fdr-t", proj_t, "FDR significance level");
    proj_cmd->add_option("--threads", proj_threads, "worker threads for pair statistics");
    proj_cmd->add_option("--out", proj_out, "edge list with p-value column")->required();

    // backbone
    std::string bb_graph, bb_model, bb_out_edges, bb_out_nodes;
    double bb_t = 0.05;
    int bb_threads = 1;
    auto* bb_cmd = app.add_subcommand("backbone", "projections of both layers re-joined by "
                                                  "the original links");
    bb_cmd->add_option("--graph", bb_graph)->required();
    bb_cmd->add_option("--model", bb_model, "fitted model (fit is rerun when omitted)");
    bb_cmd->add_option("--fdr-t", bb_t, "FDR significance level");
    bb_cmd->add_option("--threads", bb_threads, "worker threads for pair statistics");
    bb_cmd->add_option("--out-edges", bb_out_edges)->required();
    bb_cmd->add_option("--out-nodes", bb_out_nodes, "node attribute file (id, layer)");

    // communities
    std::string comm_edges, comm_interactions, comm_profiles, comm_out, comm_out_verified;
    double comm_t = 0.05;
    int comm_restarts = 10, comm_label_runs = 1000;
    std::uint64_t comm_seed = 1;
    auto* comm_cmd = app.add_subcommand("communities",
                                        "louvain partition, or the discursive pipeline when "
                                        "interaction logs are given");
    comm_cmd->add_option("--edges", comm_edges, "monopartite edge list");
    comm_cmd->add_option("--interactions", comm_interactions, "interaction log (jsonl)");
    comm_cmd->add_option("--profiles", comm_profiles, "user profiles (jsonl)");
    comm_cmd->add_option("--fdr-t", comm_t);
    comm_cmd->add_option("--restarts", comm_restarts, "louvain reshuffled restarts");
    comm_cmd->add_option("--label-runs", comm_label_runs, "label propagation repetitions");
    comm_cmd->add_option("--seed", comm_seed);
    comm_cmd->add_option("--out", comm_out)->required();
    comm_cmd->add_option("--out-verified", comm_out_verified,
                         "verified-layer partition (discursive mode)");

    // scores
    std::string sc_edges, sc_partition, sc_categories, sc_interactions, sc_profiles, sc_out,
        sc_ks_out;
    double sc_cap = 0.43;
    std::optional<double> sc_percentile;
    std::int64_t sc_offset = 0;
    int sc_restarts = 10;
    std::uint64_t sc_seed = 1;
    auto* sc_cmd = app.add_subcommand("scores", "participation/relevance scores and KS "
                                                "comparisons");
    sc_cmd->add_option("--edges", sc_edges, "monopartite edge list (single-graph mode)");
    sc_cmd->add_option("--partition", sc_partition, "node<TAB>label file");
    sc_cmd->add_option("--categories", sc_categories, "node<TAB>category file");
    sc_cmd->add_option("--interactions", sc_interactions, "interaction log (daily mode)");
    sc_cmd->add_option("--profiles", sc_profiles, "profiles (daily mode)");
    sc_cmd->add_option("--cap-threshold", sc_cap);
    sc_cmd->add_option("--cap-percentile", sc_percentile,
                       "use the top-p percentile of scores as the bot threshold");
    sc_cmd->add_option("--utc-offset", sc_offset, "day boundary shift in seconds");
    sc_cmd->add_option("--restarts", sc_restarts);
    sc_cmd->add_option("--seed", sc_seed);
    sc_cmd->add_option("--out", sc_out)->required();
    sc_cmd->add_option("--ks-out", sc_ks_out, "KS summary (date, pair, D, p-value)");

    // report
    std::string rep_kind, rep_config;
    auto* rep_cmd = app.add_subcommand("report", "analysis artifacts as csv + json sidecar");
    rep_cmd->add_option("--kind", rep_kind,
                        "presence | crosstab | composition | entities | retweeters")
        ->required();
    rep_cmd->add_option("--config", rep_config, "json config file")->required();

    // synth
    std::string synth_scenario, synth_out = ".";
    std::uint64_t synth_seed = 1;
    auto* synth_cmd = app.add_subcommand("synth", "planted fixture generator");
    synth_cmd->add_option("--scenario", synth_scenario, "injection | two_bloc | camps")
        ->required();
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--out", synth_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) {
            auto g = BipartiteGraph::load(fit_graph);
            auto model = fit_bicm(g, fit_config(fit_tol, fit_max_iter, fit_method, fit_damping));
            if (const auto parent = fs::path(fit_out).parent_path(); !parent.empty()) {
                fs::create_directories(parent);
            }
            model.save(fit_out);
            std::cout << "fit converged in " << model.report().iterations
                      << " iterations, max residual " << model.report().max_residual << '\n';
        } else if (proj_cmd->parsed()) {
            auto g = BipartiteGraph::load(proj_graph);
            auto model = proj_model.empty() ? fit_bicm(g) : BicmModel::load(proj_model);
            ProjectionConfig pcfg;
            pcfg.t = proj_t;
            pcfg.n_threads = proj_threads;
            auto proj = validated_projection(g, model, parse_layer(proj_layer), pcfg);
            if (const auto parent = fs::path(proj_out).parent_path(); !parent.empty()) {
                fs::create_directories(parent);
            }
            proj.save(proj_out);
            std::cout << "retained " << proj.graph.n_edges() << " of " << proj.n_hypotheses
                      << " pairs\n";
        } else if (bb_cmd->parsed()) {
            auto g = BipartiteGraph::load(bb_graph);
            auto model = bb_model.empty() ? fit_bicm(g) : BicmModel::load(bb_model);
            ProjectionConfig pcfg;
            pcfg.t = bb_t;
            pcfg.n_threads = bb_threads;
            auto rows = validated_projection(g, model, Layer::rows, pcfg);
            auto cols = validated_projection(g, model, Layer::columns, pcfg);
            auto bb = backbone_graph(g, rows, cols);
            if (const auto parent = fs::path(bb_out_edges).parent_path(); !parent.empty()) {
                fs::create_directories(parent);
            }
            bb.save(bb_out_edges);
            if (!bb_out_nodes.empty()) {
                auto out = open_out(bb_out_nodes);
                for (const auto& id : bb.node_ids()) {
                    out << id << '\t' << (g.row_index(id) ? "rows" : "columns") << '\n';
                }
            }
            std::cout << "backbone: " << bb.n_nodes() << " nodes, " << bb.n_edges()
                      << " edges\n";
        } else if (comm_cmd->parsed()) {
            if (!comm_edges.empty()) {
                auto g = Graph::load(comm_edges);
                auto part = louvain(g, comm_restarts, comm_seed);
                part.save(g, comm_out);
                std::cout << "modularity " << part.q << " over " << comm_restarts
                          << " restarts\n";
            } else if (!comm_interactions.empty() && !comm_profiles.empty()) {
                auto log = parse_interactions(comm_interactions);
                auto profiles = parse_profiles(comm_profiles);
                DiscursiveConfig dcfg;
                dcfg.t = comm_t;
                dcfg.louvain_restarts = comm_restarts;
                dcfg.label_runs = comm_label_runs;
                dcfg.seed = comm_seed;
                auto res = discursive_communities(log.records, profiles, dcfg);
                res.labels.save(comm_out);
                if (!comm_out_verified.empty()) {
                    auto out = open_out(comm_out_verified);
                    for (std::size_t r = 0; r < res.verified_ids.size(); ++r) {
                        out << res.verified_ids[r] << '\t'
                            << res.verified_partition.labels[r] << '\n';
                    }
                }
                std::cout << "projection modularity " << res.verified_partition.q << '\n';
            } else {
                throw InputError("communities needs --edges, or --interactions + --profiles");
            }
        } else if (sc_cmd->parsed()) {
            if (!sc_edges.empty()) {
                auto g = Graph::load(sc_edges);
                if (sc_partition.empty()) throw InputError("scores needs --partition");
                auto labels = labels_for_graph(g, load_partition(sc_partition));
                std::unordered_map<NodeId, Category> cats;
                if (!sc_categories.empty()) cats = load_categories(sc_categories);
                auto out = open_out(sc_out);
                out << "day\tnode\tcategory\tcommunity\tk\td_in\tparticipation\trelevance\n";
                write_scores_table(out, "all", node_scores(g, labels), cats);
                if (!sc_ks_out.empty()) {
                    auto ks = open_out(sc_ks_out);
                    ks << "date\tpair\tD\tp_value\n";
                    write_ks_rows(ks, "all", score_by_category(g, labels, cats));
                }
            } else if (!sc_interactions.empty() && !sc_profiles.empty()) {
                auto log = parse_interactions(sc_interactions);
                auto profiles = parse_profiles(sc_profiles);
                double threshold = sc_cap;
                if (sc_percentile) {
                    std::vector<double> caps;
                    for (const auto& p : profiles.profiles) {
                        if (!p.verified && !p.suspended && p.automation_score) {
                            caps.push_back(*p.automation_score);
                        }
                    }
                    if (caps.empty()) throw InputError("no automation scores for percentile");
                    threshold = percentile_threshold(caps, *sc_percentile);
                }
                auto cats = categorize_all(log.records, profiles, threshold);
                auto slices = daily_slices(log.records, sc_offset);
                auto out = open_out(sc_out);
                out << "day\tnode\tcategory\tcommunity\tk\td_in\tparticipation\trelevance\n";
                std::optional<std::ofstream> ks;
                if (!sc_ks_out.empty()) {
                    ks = open_out(sc_ks_out);
                    *ks << "date\tpair\tD\tp_value\n";
                }
                for (std::size_t day_idx = 0; day_idx < slices.size(); ++day_idx) {
                    const auto& slice = slices[day_idx];
                    auto pairs = retweet_pairs(log.records, slice.record_indices);
                    if (pairs.empty()) continue;
                    auto g = Graph::from_edges(pairs);
                    if (g.n_edges() == 0) continue;
                    auto part = louvain(g, sc_restarts, derive_seed(sc_seed, day_idx));
                    write_scores_table(out, slice.day, node_scores(g, part.labels), cats);
                    if (ks) write_ks_rows(*ks, slice.day, score_by_category(g, part.labels, cats));
                }
            } else {
                throw InputError("scores needs --edges, or --interactions + --profiles");
            }
        } else if (rep_cmd->parsed()) {
            return run_report(rep_kind, rep_config);
        } else if (synth_cmd->parsed()) {
            auto files = synth::generate_scenario(synth_scenario, synth_out, synth_seed);
            for (const auto& f : files) std::cout << f << '\n';
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
