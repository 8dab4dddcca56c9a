#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fpst/train.hpp"

namespace fs = std::filesystem;
using namespace fpst;

namespace {

struct CommonOpts {
  std::string edges_path;
  std::string features_path;
  std::string out_dir = ".";
  RunConfig run;
  std::string mode = "linearized";
  std::string act = "relu";
  std::string neg = "auto";
  bool no_layernorm = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--edges", o.edges_path, "edge list file, one 'u v' per line")->required();
  cmd->add_option("--features", o.features_path, "node feature CSV");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--dim", o.run.model.dim, "model width");
  cmd->add_option("--heads", o.run.model.heads, "attention heads");
  cmd->add_option("--layers", o.run.model.layers, "transformer blocks");
  cmd->add_option("--ffn-mult", o.run.model.ffn_mult, "ffn hidden multiplier");
  cmd->add_option("--epochs", o.run.epochs, "training epochs");
  cmd->add_option("--lr", o.run.lr, "weight learning rate");
  cmd->add_option("--curv-lr", o.run.curv_lr, "curvature learning rate");
  cmd->add_option("--weight-decay", o.run.weight_decay, "L2 weight decay");
  cmd->add_option("--kappa-init", o.run.model.kappa_init, "initial curvature per head");
  cmd->add_option("--mode", o.mode, "attention mode: dense or linearized");
  cmd->add_option("--act", o.act, "ffn activation: relu, elu, tanh, sigmoid");
  cmd->add_option("--dropout", o.run.model.dropout, "tangent-space dropout");
  cmd->add_option("--eigvecs", o.run.model.eigvecs, "Laplacian eigenvector count");
  cmd->add_option("--hops", o.run.model.hops, "feature premixing hops");
  cmd->add_option("--seed", o.run.seed, "RNG seed");
  cmd->add_option("--eval-interval", o.run.eval_interval, "epochs between evaluations");
  cmd->add_option("--neg", o.neg, "negatives per anchor: 'all', 'auto', or a count");
  cmd->add_flag("--no-layernorm", o.no_layernorm, "disable tangent layernorm");
}

void finish_common(CommonOpts& o) {
  if (o.mode == "dense") {
    o.run.model.mode = AttnMode::Dense;
  } else if (o.mode == "linearized") {
    o.run.model.mode = AttnMode::Linearized;
  } else {
    throw std::invalid_argument("unknown attention mode '" + o.mode + "'");
  }
  if (o.act == "relu") o.run.model.act = Act::ReLU;
  else if (o.act == "elu") o.run.model.act = Act::ELU;
  else if (o.act == "tanh") o.run.model.act = Act::Tanh;
  else if (o.act == "sigmoid") o.run.model.act = Act::Sigmoid;
  else throw std::invalid_argument("unknown activation '" + o.act + "'");
  if (o.neg == "all") o.run.neg_samples = 0;
  else if (o.neg == "auto") o.run.neg_samples = kNegAuto;
  else o.run.neg_samples = std::stoul(o.neg);
  if (o.run.model.dim % o.run.model.heads != 0)
    throw std::invalid_argument("--dim must be divisible by --heads");
  o.run.model.layernorm = !o.no_layernorm;
  fs::create_directories(o.out_dir);
  o.run.checkpoint_path = (fs::path(o.out_dir) / "model.fpst").string();
}

Tensor maybe_features(const std::string& path) {
  return path.empty() ? Tensor() : load_csv_matrix(path);
}

int run_reconstruct(CommonOpts& o) {
  finish_common(o);
  auto loaded = load_edge_list(o.edges_path);
  std::ofstream csv(fs::path(o.out_dir) / "metrics.csv");
  TrainResult res = train_reconstruction(o.run, loaded.graph, &csv, maybe_features(o.features_path));
  std::cout << "final_loss " << res.final_loss << "\nmap " << res.final_metric
            << "\nmean_kappa " << res.mean_kappa << "\n";
  return 0;
}

int run_nodeclf(CommonOpts& o, const std::string& labels_path, const std::string& splits_path,
                const std::string& synth, std::size_t patience) {
  finish_common(o);
  o.run.patience = patience;
  auto loaded = load_edge_list(o.edges_path);
  Graph& g = loaded.graph;
  if (o.features_path.empty()) throw std::invalid_argument("nodeclf requires --features");
  Tensor feats = load_csv_matrix(o.features_path);
  LabelsResult lab = load_labels(labels_path);
  if (lab.labels.size() != g.n)
    throw std::invalid_argument("label count does not match node count");
  g.labels = lab.labels;
  if (!splits_path.empty()) {
    LabelsResult sp = load_labels(splits_path);
    if (sp.split.empty() || sp.split.size() != g.n)
      throw std::invalid_argument("split file must give train|val|test for every node");
    g.split = sp.split;
  } else if (!lab.split.empty()) {
    g.split = lab.split;
  } else if (!synth.empty()) {
    SynthSplit kind;
    if (synth == "citation") kind = SynthSplit::Citation;
    else if (synth == "622") kind = SynthSplit::Balanced622;
    else throw std::invalid_argument("unknown synthetic split '" + synth + "'");
    std::mt19937_64 rng(o.run.seed);
    g.split = synthesize_split(g.labels, kind, rng);
  } else {
    throw std::invalid_argument("no split given; pass --splits or --synth-split");
  }
  std::ofstream csv(fs::path(o.out_dir) / "metrics.csv");
  TrainResult res = train_node_classification(o.run, g, feats, &csv);
  std::cout << "final_loss " << res.final_loss << "\ntest_accuracy " << res.final_metric
            << "\ntest_micro_f1 " << res.test_micro_f1 << "\nmean_kappa " << res.mean_kappa
            << "\n";
  return 0;
}

int run_curvature_hist(const std::string& edges_path, std::size_t samples_per_node,
                       std::uint64_t seed, const std::string& out_path) {
  auto loaded = load_edge_list(edges_path);
  CurvatureHistogram hist = curvature_histogram(loaded.graph, samples_per_node, seed);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
  char buf[64];
  for (double v : hist.samples) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.17g\n", hist.mean);
  out << buf;
  std::cout << "samples " << hist.samples.size() << "\nmean " << hist.mean << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transformer over products of stereographic spaces"};
  app.require_subcommand(1);

  CommonOpts rec, clf;
  std::string labels_path, splits_path, synth;
  std::size_t patience = 200;
  std::string hist_edges, hist_out = "curvature_hist.csv";
  std::size_t samples_per_node = 10;
  std::uint64_t hist_seed = 0;

  auto* c_rec = app.add_subcommand("reconstruct", "train graph reconstruction embeddings");
  add_common(c_rec, rec);
  c_rec->add_option("--curv-prior", rec.run.curv_prior,
                    "weight pulling curvatures toward the graph's mean sectional curvature "
                    "(0 disables)");
  c_rec->add_option("--noise", rec.run.feature_noise, "sigma of the one-hot feature noise");

  auto* c_clf = app.add_subcommand("nodeclf", "train a node classifier");
  add_common(c_clf, clf);
  c_clf->add_option("--labels", labels_path, "one integer label per line")->required();
  c_clf->add_option("--splits", splits_path, "one of train|val|test per line");
  c_clf->add_option("--synth-split", synth, "synthesize a split: citation or 622");
  c_clf->add_option("--patience", patience, "evals without val improvement before stopping");

  auto* c_hist = app.add_subcommand("curvature-hist", "discrete sectional curvature histogram");
  c_hist->add_option("--edges", hist_edges, "edge list file")->required();
  c_hist->add_option("--samples-per-node", samples_per_node,
                     "neighbor pairs per node; 0 enumerates all");
  c_hist->add_option("--seed", hist_seed, "RNG seed");
  c_hist->add_option("--out", hist_out, "output file");

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_rec->parsed()) return run_reconstruct(rec);
    if (c_clf->parsed()) return run_nodeclf(clf, labels_path, splits_path, synth, patience);
    return run_curvature_hist(hist_edges, samples_per_node, hist_seed, hist_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
