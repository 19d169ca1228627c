// Command-line frontend: train / eval / predict / gradcheck on activity
// feature files.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "dbn/dbn.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

struct CommonArgs {
    std::string train_features, train_labels, test_features, test_labels;
    std::vector<int> layers;
    int epochs = 25;
    int cd_k = 1;
    double lr = 0.05;
    double momentum = 0.5;
    int batch = 1;
    std::uint64_t seed = 0;
    std::string preset;
    bool epochs_given = false;
    bool fine_tune = false;
    int fine_tune_epochs = 30;
    std::string out = "model.dbn";
    bool export_text = false;
    int columns = 12;
};

dbn::TrainConfig build_config(const CommonArgs& args) {
    dbn::TrainConfig config;
    if (args.preset == "paper-small") {
        config = dbn::preset_paper_small();
    } else if (args.preset == "paper-large") {
        config = dbn::preset_paper_large();
        std::cerr << "note: paper-large trains 1000-unit layers for 250 epochs; "
                     "expect a long run (tens of minutes)\n";
    } else if (!args.preset.empty()) {
        throw CLI::ValidationError("--preset must be paper-small or paper-large");
    }
    if (!args.layers.empty()) {
        config.layer_sizes = args.layers;
    } else if (config.layer_sizes.empty()) {
        config.layer_sizes = {args.columns, 50, 50, 10};
    }
    if (args.epochs_given || args.preset.empty()) config.epochs = args.epochs;
    config.cd_k = args.cd_k;
    config.learning_rate = args.lr;
    config.momentum = args.momentum;
    config.batch_size = args.batch;
    config.seed = args.seed;
    config.fine_tune = args.fine_tune;
    config.fine_tune_epochs = args.fine_tune ? args.fine_tune_epochs : 0;
    // Preset epochs take effect unless overridden on the command line.
    return config;
}

int cmd_train(const CommonArgs& args) {
    dbn::DatasetSchema schema;
    schema.expected_columns = args.columns;
    dbn::LabeledDataset train =
        dbn::load_dataset(args.train_features, args.train_labels, schema, dbn::SplitTag::Train);

    dbn::TrainConfig config = build_config(args);
    if (config.layer_sizes.front() != train.num_features())
        config.layer_sizes.front() = train.num_features();

    std::cout << "training: " << train.num_samples() << " samples, "
              << train.num_features() << " features, layers";
    for (int s : config.layer_sizes) std::cout << " " << s;
    std::cout << ", " << config.epochs << " epochs per layer\n";

    dbn::TrainedModel trained = dbn::train_full_model(train, config);

    std::ofstream log(args.out + ".log");
    log << std::setprecision(10);
    for (std::size_t e = 0; e < trained.head_loss_trace.size(); ++e)
        log << "head epoch " << e << " loss " << trained.head_loss_trace[e] << "\n";
    log << "train accuracy " << trained.train_accuracy << "\n";

    dbn::save_model(trained.model, args.out);
    if (args.export_text) {
        std::ofstream txt(args.out + ".txt");
        dbn::export_model_text(trained.model, txt);
    }

    std::cout << std::fixed << std::setprecision(2)
              << "train accuracy: " << 100.0 * trained.train_accuracy << "%, error: "
              << 100.0 * (1.0 - trained.train_accuracy) << "%\n";
    std::cout << "model written to " << args.out << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& features_path,
             const std::string& labels_path, const std::string& out_dir, int columns) {
    dbn::Model model = dbn::load_model(model_path);
    dbn::DatasetSchema schema;
    schema.expected_columns = columns > 0 ? columns : model.stack.input_size();
    dbn::LabeledDataset ds =
        dbn::load_dataset(features_path, labels_path, schema, dbn::SplitTag::Test);

    dbn::EvalReport report = dbn::evaluate_model(model, ds);
    dbn::render_report(report, out_dir);
    std::cout << std::fixed << std::setprecision(2)
              << "accuracy: " << 100.0 * report.accuracy << "%, error: "
              << 100.0 * report.error_rate << "%\n";
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& features_path, int columns) {
    dbn::Model model = dbn::load_model(model_path);
    int cols = columns > 0 ? columns : model.stack.input_size();

    // Reuse the dataset parser by pairing features with dummy labels.
    std::ifstream f(features_path);
    if (!f) throw dbn::io_error("cannot open feature file: " + features_path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto values = dbn::detail::parse_numeric_line(line, line_no, features_path);
        if (static_cast<int>(values.size()) != cols)
            throw dbn::parse_error(features_path + ":" + std::to_string(line_no) +
                                   ": expected " + std::to_string(cols) + " columns");
        rows.push_back(std::move(values));
    }
    dbn::Matrix features(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < cols; ++c)
            features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];

    dbn::Matrix probs = dbn::model_predict_proba(model, features);
    std::cout << std::setprecision(6);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        int best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c)
            if (probs(r, c) > probs(r, best)) best = static_cast<int>(c);
        std::cout << model.class_names[static_cast<std::size_t>(best)];
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            std::cout << " " << probs(r, c);
        std::cout << "\n";
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    dbn::GradcheckOptions opt;
    opt.seed = seed;
    bool all_passed = true;
    for (const auto& res : dbn::run_gradcheck(opt)) {
        std::cout << (res.passed ? "PASS" : "FAIL") << "  " << res.name
                  << "  (worst " << res.worst << ", tolerance " << res.tolerance << "; "
                  << res.detail << ")\n";
        all_passed = all_passed && res.passed;
    }
    return all_passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep belief network trainer for smartphone activity features"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string model_path, features_path, labels_path, out_dir = "report";
    std::uint64_t gradcheck_seed = 0;
    int eval_columns = 0;

    auto* train = app.add_subcommand("train", "Pretrain a DBN and train the classifier head");
    train->add_option("--train-features", args.train_features, "feature file, one sample per line")->required();
    train->add_option("--train-labels", args.train_labels, "label file, one integer per line")->required();
    train->add_option("--layers", args.layers, "layer sizes including input, e.g. 12 50 50 10");
    train->add_option("--epochs", args.epochs, "epochs per layer");
    train->add_option("--cd-k", args.cd_k, "contrastive divergence chain length");
    train->add_option("--lr", args.lr, "learning rate");
    train->add_option("--momentum", args.momentum, "momentum in [0,1)");
    train->add_option("--batch", args.batch, "mini-batch size");
    train->add_option("--seed", args.seed, "random seed");
    train->add_option("--preset", args.preset, "paper-small or paper-large");
    train->add_flag("--fine-tune", args.fine_tune, "backpropagate through the whole stack after head training");
    train->add_option("--fine-tune-epochs", args.fine_tune_epochs, "fine-tuning epochs");
    train->add_option("--columns", args.columns, "feature columns per row");
    train->add_option("--out", args.out, "output model path");
    train->add_flag("--export-text", args.export_text, "also write a readable dump next to the model");

    auto* eval = app.add_subcommand("eval", "Evaluate a model and write metric CSVs");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--test-features", features_path, "feature file")->required();
    eval->add_option("--test-labels", labels_path, "label file")->required();
    eval->add_option("--out", out_dir, "report output directory");
    eval->add_option("--columns", eval_columns, "feature columns per row (default: model input size)");

    auto* predict = app.add_subcommand("predict", "Print predicted class and probabilities per sample");
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("--test-features", features_path, "feature file")->required();
    predict->add_option("--columns", eval_columns, "feature columns per row (default: model input size)");

    auto* gradcheck = app.add_subcommand("gradcheck", "Run the exact-enumeration verification suite");
    gradcheck->add_option("--seed", gradcheck_seed, "random seed");

    try {
        app.parse(argc, argv);
        args.epochs_given = train->count("--epochs") > 0;
        if (train->parsed()) return cmd_train(args);
        if (eval->parsed()) return cmd_eval(model_path, features_path, labels_path, out_dir, eval_columns);
        if (predict->parsed()) return cmd_predict(model_path, features_path, eval_columns);
        if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const dbn::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const dbn::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const dbn::io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
