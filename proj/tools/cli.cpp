#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlpgrad/backprop.hpp"
#include "mlpgrad/gradcheck.hpp"
#include "mlpgrad/io.hpp"
#include "mlpgrad/network.hpp"
#include "mlpgrad/trainer.hpp"
#include "mlpgrad/verify.hpp"

namespace mlpgrad::cli {
namespace {

// Input problems that are reported with kBadInput rather than a check failure.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << contents) || !out.flush()) throw InputError("cannot write '" + path + "'");
}

Topology parse_layers(const std::string& text) {
  std::vector<long long> widths;
  for (std::string_view field : detail::split(text, ',')) {
    long long h = 0;
    if (!parse_integer(field, h)) throw InputError("--layers: bad width '" + std::string(field) + "'");
    widths.push_back(h);
  }
  try {
    return build_topology(widths);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("--layers: ") + e.what());
  }
}

Activations parse_activations(const std::string& hidden, const std::string& output) {
  try {
    return {parse_activation(hidden), parse_activation(output)};
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

const std::vector<std::string> kActivationNames = {"identity", "sigmoid", "tanh", "relu"};

std::string describe(const WeightIndex& k) {
  return "w(" + std::to_string(k.layer) + "," + std::to_string(k.neuron) + "," + std::to_string(k.input) + ")";
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string layers;
  double lr = 0.01;
  std::size_t epochs = 100;
  std::uint64_t seed = 42;
  std::string hidden = "tanh";
  std::string output = "identity";
  std::string model_out;
  bool header = false;
  bool no_shuffle = false;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const Topology t = parse_layers(f.layers);
  const Activations phi = parse_activations(f.hidden, f.output);
  const Dataset ds = load_dataset(read_file(f.data), t.inputs(), t.outputs(), f.header);
  if (ds.empty()) throw InputError("'" + f.data + "' contains no samples");
  const TrainConfig cfg{f.lr, f.epochs, f.seed, !f.no_shuffle};
  const TrainResult result = train(t, ds, cfg, phi);
  for (std::size_t k = 0; k < result.history.epoch_error.size(); ++k)
    out << "epoch " << k + 1 << " error " << format_double(result.history.epoch_error[k]) << '\n';
  write_file(f.model_out, save_model(t, phi, result.weights));
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictFlags {
  std::string model;
  std::string input;
  std::string data;
  bool header = false;
};

int cmd_predict(const PredictFlags& f, std::ostream& out) {
  const Model model = load_model(read_file(f.model));
  const Topology& t = model.topology;
  std::vector<std::vector<double>> rows;
  if (!f.input.empty()) {
    rows.push_back(parse_number_list(f.input));
  } else {
    const std::string text = read_file(f.data);
    const auto lines = detail::split_lines(text);
    for (std::size_t k = f.header ? 1 : 0; k < lines.size(); ++k) {
      if (detail::trim(lines[k]).empty()) continue;
      try {
        rows.push_back(parse_number_list(lines[k]));
      } catch (const FormatError& e) {
        throw FormatError("row " + std::to_string(k + 1) + ": " + e.what());
      }
      // Rows that also carry targets are accepted; the targets are ignored.
      if (rows.back().size() == t.inputs() + t.outputs()) rows.back().resize(t.inputs());
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != t.inputs())
      throw InputError("dimension mismatch: input " + std::to_string(r + 1) + " has " +
                       std::to_string(rows[r].size()) + " values, model expects " + std::to_string(t.inputs()));
  for (const auto& x : rows) out << format_row(forward(t, model.weights, x, model.activations).output()) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct GradcheckFlags {
  std::string layers;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  double step = kDefaultStep;
  std::size_t trials = 20;
  std::string hidden = "tanh";
  std::string output = "identity";
};

// Pre-activations closer than this to the relu kink are resampled.
constexpr double kKinkMargin = 1e-3;
constexpr int kMaxResamples = 10000;

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out, std::ostream& err) {
  const Topology t = parse_layers(f.layers);
  const Activations phi = parse_activations(f.hidden, f.output);
  if (!(f.step > 0)) throw InputError("--step must be positive");
  if (!(f.tol >= 0)) throw InputError("--tol must be non-negative");
  const bool kinked = phi.hidden == Activation::relu || phi.output == Activation::relu;

  struct Worst {
    double rel = 0;
    std::size_t trial = 0;
    WeightIndex index;
  } worst;
  std::vector<std::string> failure_lines;
  std::size_t entries = 0;
  for (std::size_t trial = 0; trial < f.trials; ++trial) {
    const std::uint64_t trial_seed = mix_seed(f.seed, trial);
    Instance inst = random_instance(t, phi, trial_seed);
    for (int attempt = 1; kinked && min_abs_preactivation(forward(t, inst.weights, inst.x, phi)) < kKinkMargin;
         ++attempt) {
      if (attempt > kMaxResamples) throw std::runtime_error("could not sample away from the relu kink");
      inst = random_instance(t, phi, mix_seed(trial_seed, static_cast<std::uint64_t>(attempt)));
    }
    const Gradient analytic = bp_reg(t, inst.weights, inst.x, inst.d, phi);
    const Gradient numeric = finite_difference_gradient(t, inst.weights, inst.x, inst.d, phi, f.step);
    const ComparisonReport rep = compare_gradients(t, analytic, numeric, f.tol);
    entries += rep.entry_count;
    if (trial == 0 || detail::worse(rep.max_relative_error, worst.rel))
      worst = {rep.max_relative_error, trial + 1, *rep.worst_index};
    for (const ComparisonFailure& fail : rep.failures)
      failure_lines.push_back("trial " + std::to_string(trial + 1) + " " + describe(*fail.index) +
                              " backprop " + format_double(fail.a) + " finite-difference " + format_double(fail.b) +
                              " rel " + format_double(fail.rel));
  }
  const bool ok = failure_lines.empty();
  out << "gradcheck " << (ok ? "PASS" : "FAIL") << " trials " << f.trials << " entries " << entries
      << " worst relative error " << format_double(worst.rel);
  if (f.trials > 0) out << " at " << describe(worst.index) << " trial " << worst.trial;
  out << " tolerance " << format_double(f.tol) << '\n';
  for (const auto& line : failure_lines) out << line << '\n';
  if (!ok) err << "gradcheck: " << failure_lines.size() << " entries exceed tolerance\n";
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  const VerifyReport report = run_verification(opt);
  for (const PropertyResult& p : report.properties) {
    out << (p.passed() ? "PASS " : "FAIL ") << p.name << " instances " << p.instances << " worst "
        << format_double(p.worst_error) << " tolerance " << format_double(p.tolerance) << '\n';
    if (!p.passed()) err << "verify: property '" << p.name << "' violated on " << p.first_failure << '\n';
  }
  return report.passed() ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilayer perceptron gradients: training, prediction and oracle checks", "mlpgrad"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a regression network with online SGD");
  train->add_option("--data", train_flags.data, "CSV with input columns followed by target columns")->required();
  train->add_option("--layers", train_flags.layers, "Layer widths, e.g. 2,3,1")->required();
  train->add_option("--lr", train_flags.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_flags.epochs, "Number of epochs")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--seed", train_flags.seed, "Initialisation and shuffling seed")->capture_default_str();
  train->add_option("--hidden-activation", train_flags.hidden)->capture_default_str()->check(CLI::IsMember(kActivationNames));
  train->add_option("--output-activation", train_flags.output)->capture_default_str()->check(CLI::IsMember(kActivationNames));
  train->add_option("--model-out", train_flags.model_out, "Where to write the trained model")->required();
  train->add_flag("--header", train_flags.header, "Skip the first line of the data file");
  train->add_flag("--no-shuffle", train_flags.no_shuffle, "Visit samples in file order every epoch");

  PredictFlags predict_flags;
  auto* predict = app.add_subcommand("predict", "Evaluate a saved model");
  predict->add_option("--model", predict_flags.model, "Model file")->required();
  auto* input_opt = predict->add_option("--input", predict_flags.input, "One input as a comma list");
  auto* data_opt = predict->add_option("--data", predict_flags.data, "CSV of inputs, one per row");
  input_opt->excludes(data_opt);
  predict->add_flag("--header", predict_flags.header, "Skip the first line of the data file");

  GradcheckFlags gc_flags;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop against central finite differences");
  gradcheck->add_option("--layers", gc_flags.layers, "Layer widths, e.g. 2,3,1")->required();
  gradcheck->add_option("--seed", gc_flags.seed)->capture_default_str();
  gradcheck->add_option("--tol", gc_flags.tol, "Relative tolerance")->capture_default_str();
  gradcheck->add_option("--step", gc_flags.step, "Finite-difference step")->capture_default_str();
  gradcheck->add_option("--trials", gc_flags.trials)->capture_default_str();
  gradcheck->add_option("--hidden-activation", gc_flags.hidden)->capture_default_str()->check(CLI::IsMember(kActivationNames));
  gradcheck->add_option("--output-activation", gc_flags.output)->capture_default_str()->check(CLI::IsMember(kActivationNames));

  VerifyOptions verify_opt;
  auto* verify = app.add_subcommand("verify", "Run the oracle-equivalence property suite");
  verify->add_option("--max-layers", verify_opt.max_layers)->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_option("--max-width", verify_opt.max_width)->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_option("--trials", verify_opt.trials)->capture_default_str();
  verify->add_option("--seed", verify_opt.seed)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) return cmd_train(train_flags, out);
    if (*predict) {
      if (predict_flags.input.empty() == predict_flags.data.empty()) {
        err << "predict: exactly one of --input or --data is required\n";
        return kBadInput;
      }
      return cmd_predict(predict_flags, out);
    }
    if (*gradcheck) return cmd_gradcheck(gc_flags, out, err);
    if (*verify) return cmd_verify(verify_opt, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}

}  // namespace mlpgrad::cli
