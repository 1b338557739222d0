#include "scorefold/cli.hpp"

#include "scorefold/conditioning.hpp"
#include "scorefold/handedness.hpp"
#include "scorefold/io.hpp"
#include "scorefold/metrics.hpp"
#include "scorefold/noise.hpp"
#include "scorefold/pairwise_net.hpp"
#include "scorefold/sampler.hpp"
#include "scorefold/score.hpp"
#include "scorefold/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <memory>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scorefold::cli {

namespace fs = std::filesystem;

namespace {

/// Shortest text that reads back to the same double.
std::string fmt(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

std::string fmt6(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6g", value);
    return buffer;
}

// ---------------------------------------------------------------------------
// Options shared by several subcommands
// ---------------------------------------------------------------------------

struct ScheduleOptions {
    double sigma_max = 10.0;
    double sigma_min = 0.01;
    std::size_t levels = 32;

    void add(CLI::App& app) {
        app.add_option("--sigma-max", sigma_max, "Largest noise level (Å)")->capture_default_str();
        app.add_option("--sigma-min", sigma_min, "Smallest noise level (Å)")->capture_default_str();
        app.add_option("--levels", levels, "Number of noise levels K")->capture_default_str();
    }
    NoiseSchedule build() const { return NoiseSchedule::geometric(sigma_max, sigma_min, levels); }
    void echo(io::Metadata& m) const {
        m.emplace_back("sigma_max", fmt(sigma_max));
        m.emplace_back("sigma_min", fmt(sigma_min));
        m.emplace_back("levels", std::to_string(levels));
    }
};

std::size_t default_jobs() {
    const char* env = std::getenv("SCOREFOLD_JOBS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 0) {
        fail(ErrorKind::InvalidConfig, std::string("SCOREFOLD_JOBS is not a non-negative integer: ") + env);
    }
    return static_cast<std::size_t>(value);
}

PredictionMask parse_mask(const std::string& text) {
    if (text == "none") return PredictionMask::None;
    if (text == "orientation") return PredictionMask::Orientation;
    fail(ErrorKind::InvalidConfig, "unknown predictions mask '" + text + "'");
}

Structure load_structure(const fs::path& path, const std::string& chain, std::ostream& err) {
    auto parsed = io::parse_pdb_ca(path, chain);
    if (parsed.residues_without_ca > 0) {
        err << "warning: " << path.string() << ": skipped " << parsed.residues_without_ca
            << " residue(s) without a CA atom\n";
    }
    return std::move(parsed.structure);
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix);
}

fs::path config_echo_path(const fs::path& output) {
    fs::path p = output;
    p += ".config";
    return p;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        fail(ErrorKind::Io, "cannot create directory " + dir.string());
    }
}

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

struct ScheduleCmd {
    ScheduleOptions schedule;
    double lambda0 = 0.1;

    void add(CLI::App& app) {
        schedule.add(app);
        app.add_option("--lambda0", lambda0, "Reference step size")->capture_default_str();
    }

    void run(std::ostream& out) const {
        if (!(lambda0 > 0.0)) fail(ErrorKind::InvalidConfig, "--lambda0 must be positive");
        const NoiseSchedule s = schedule.build();
        io::Metadata echo;
        schedule.echo(echo);
        echo.emplace_back("lambda0", fmt(lambda0));
        for (const auto& [key, value] : echo) out << "# " << key << '=' << value << '\n';
        io::CsvTable table{{"k", "sigma", "lambda"}, {}};
        for (std::size_t k = 0; k < s.size(); ++k) {
            table.rows.push_back({static_cast<std::int64_t>(k + 1), s.sigma(k), step_size(s, k, lambda0)});
        }
        out << io::format_csv(table);
    }
};

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

struct PerturbCmd {
    std::string pdb;
    std::string chain = "A";
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::string out_path;

    void add(CLI::App& app) {
        app.add_option("--pdb", pdb, "Input PDB")->required();
        app.add_option("--chain", chain, "Chain identifier")->capture_default_str();
        app.add_option("--sigma", sigma, "Noise standard deviation (Å)")->required();
        app.add_option("--seed", seed, "Random seed")->capture_default_str();
        app.add_option("--out", out_path, "Output PDB")->required();
    }

    void run(std::ostream& out, std::ostream& err) const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidConfig, "--sigma must be positive");
        const Structure input = load_structure(pdb, chain, err);
        input.validate(1);
        Rng rng = make_rng(seed);
        Structure perturbed{input.sequence, perturb(input.coords, sigma, rng)};
        io::write_ca_pdb(perturbed, out_path);
        const double displacement =
            std::sqrt((perturbed.coords - input.coords).squaredNorm() / static_cast<double>(input.length()));
        io::write_config_echo({{"command", "perturb"},
                               {"pdb", pdb},
                               {"chain", chain},
                               {"sigma", fmt(sigma)},
                               {"seed", std::to_string(seed)},
                               {"out", out_path}},
                              config_echo_path(out_path));
        out << "residues=" << input.length() << '\n';
        out << "rmsd_to_input=" << fmt6(displacement) << '\n';
    }
};

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

std::vector<TrainingExample> load_examples(const std::vector<io::ManifestEntry>& entries,
                                           const AssembleOptions& options, std::ostream& err) {
    std::vector<TrainingExample> examples;
    for (const auto& entry : entries) {
        TrainingExample ex;
        ex.structure = load_structure(entry.pdb, entry.chain, err);
        ex.structure.validate(4);
        std::optional<Predictions> predictions;
        if (entry.predictions) {
            predictions = load_predictions(*entry.predictions);
            if (predictions->map.length != ex.structure.length()) {
                fail(ErrorKind::InvalidInput, "entry " + entry.id + ": predictions cover " +
                                                  std::to_string(predictions->map.length) +
                                                  " residues, structure has " +
                                                  std::to_string(ex.structure.length()));
            }
        }
        ex.bundle = assemble(ex.structure.sequence, predictions, options);
        examples.push_back(std::move(ex));
    }
    return examples;
}

struct TrainCmd {
    std::string manifest;
    TrainConfig train;
    NetConfig net;
    ScheduleOptions schedule;
    std::string mask = "none";
    std::string out_model;
    std::string loss_csv;
    std::size_t jobs = 0;

    void add(CLI::App& app) {
        app.add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
        app.add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
        app.add_option("--batch", train.batch, "Batch size")->capture_default_str();
        app.add_option("--lr", train.learning_rate, "Adam learning rate")->capture_default_str();
        app.add_option("--crop", train.crop, "Crop window (0 = whole chains)")->capture_default_str();
        app.add_option("--width", net.width, "Hidden width")->capture_default_str();
        app.add_option("--blocks", net.blocks, "Residual blocks")->capture_default_str();
        app.add_option("--level-embedding", net.level_embedding, "Noise-level embedding width")
            ->capture_default_str();
        app.add_option("--pe-width", net.pe_width, "Positional encoding width")->capture_default_str();
        app.add_option("--seed", train.seed, "Random seed")->capture_default_str();
        app.add_option("--predictions-mask", mask, "none | orientation")->capture_default_str();
        app.add_option("--out-model", out_model, "Checkpoint path (best validation loss)")->required();
        app.add_option("--loss-csv", loss_csv, "Loss history CSV (default <out-model>_loss.csv)");
        app.add_option("--jobs", jobs, "Worker threads (0 = all)");
        schedule.add(app);
    }

    void run(std::ostream& out, std::ostream& err, int verbosity) const {
        const auto data = io::load_manifest(manifest);
        const AssembleOptions options{net.pe_width, parse_mask(mask)};
        const auto train_set = load_examples(data.split(io::Split::Train), options, err);
        const auto valid_set = load_examples(data.split(io::Split::Valid), options, err);
        if (train_set.empty()) fail(ErrorKind::InvalidInput, "manifest has no training entries");

        auto initial = PairwiseScoreNet::initialized(net, schedule.build(), train.seed);
        const auto result = train_with_jobs(std::move(initial), train_set, valid_set, err, verbosity);

        result.best_net.save(out_model);
        const fs::path csv_path = loss_csv.empty() ? sibling(out_model, "_loss.csv") : fs::path(loss_csv);
        io::CsvTable table{{"epoch", "train_loss", "valid_loss"}, {}};
        for (const auto& r : result.history) {
            io::CsvField valid = std::string();
            if (r.valid_loss) valid = *r.valid_loss;
            table.rows.push_back({static_cast<std::int64_t>(r.epoch), r.train_loss, valid});
        }
        io::emit_csv(table, csv_path);

        io::Metadata echo{{"command", "train"},
                          {"manifest", manifest},
                          {"epochs", std::to_string(train.epochs)},
                          {"batch", std::to_string(train.batch)},
                          {"lr", fmt(train.learning_rate)},
                          {"crop", std::to_string(train.crop)},
                          {"width", std::to_string(net.width)},
                          {"blocks", std::to_string(net.blocks)},
                          {"level_embedding", std::to_string(net.level_embedding)},
                          {"pe_width", std::to_string(net.pe_width)},
                          {"seed", std::to_string(train.seed)},
                          {"predictions_mask", mask}};
        schedule.echo(echo);
        echo.emplace_back("train_entries", std::to_string(train_set.size()));
        echo.emplace_back("valid_entries", std::to_string(valid_set.size()));
        echo.emplace_back("out_model", out_model);
        echo.emplace_back("loss_csv", csv_path.string());
        io::write_config_echo(echo, config_echo_path(out_model));

        out << "best_epoch=" << result.best_epoch << '\n';
        out << "initial_train_loss=" << fmt6(result.history.front().train_loss) << '\n';
        out << "final_train_loss=" << fmt6(result.history.back().train_loss) << '\n';
        out << "parameters=" << result.best_net.parameter_count() << '\n';
    }

    TrainResult train_with_jobs(PairwiseScoreNet initial, const std::vector<TrainingExample>& train_set,
                                const std::vector<TrainingExample>& valid_set, std::ostream& err,
                                int verbosity) const;
};

void set_jobs(std::size_t jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(static_cast<int>(jobs));
#else
    (void)jobs;
#endif
}

TrainResult TrainCmd::train_with_jobs(PairwiseScoreNet initial, const std::vector<TrainingExample>& train_set,
                                      const std::vector<TrainingExample>& valid_set, std::ostream& err,
                                      int verbosity) const {
    set_jobs(jobs);
    const auto log = [&](const EpochRecord& r) {
        if (verbosity <= 0) return;
        err << "epoch " << r.epoch << " train " << fmt6(r.train_loss);
        if (r.valid_loss) err << " valid " << fmt6(*r.valid_loss);
        err << '\n';
    };
    return scorefold::train(std::move(initial), train_set, valid_set, train, log);
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleCmd {
    std::string model;
    std::string oracle_pdb;
    std::string seq;
    std::string pdb;
    std::string chain = "A";
    std::string predictions;
    std::string mask = "none";
    std::size_t decoys = 128;
    std::size_t stages_t = 64;
    double lambda0 = 0.1;
    std::string hirm_ref;
    std::uint64_t seed = 0;
    std::size_t snapshot_stride = 0;
    std::string out_dir;
    std::size_t jobs = 0;
    ScheduleOptions schedule;

    void add(CLI::App& app) {
        auto* model_opt = app.add_option("--model", model, "Trained checkpoint");
        auto* oracle_opt = app.add_option("--oracle-pdb", oracle_pdb, "Native PDB for the oracle score");
        model_opt->excludes(oracle_opt);
        app.add_option("--seq", seq, "Target sequence (one-letter)");
        app.add_option("--pdb", pdb, "Take the target sequence from this PDB");
        app.add_option("--chain", chain, "Chain identifier for --pdb / --oracle-pdb")->capture_default_str();
        app.add_option("--predictions", predictions, "L×L×100 prediction tensor");
        app.add_option("--predictions-mask", mask, "none | orientation")->capture_default_str();
        app.add_option("--decoys", decoys, "Decoys to generate")->capture_default_str();
        app.add_option("--stages-T", stages_t, "Langevin iterations per noise level")->capture_default_str();
        app.add_option("--lambda0", lambda0, "Reference step size")->capture_default_str();
        app.add_option("--hirm-ref", hirm_ref, "Reference dihedral histogram (enables handedness resolution)");
        app.add_option("--seed", seed, "Random seed")->capture_default_str();
        app.add_option("--snapshot-stride", snapshot_stride, "Also dump every n-th intra-stage iterate")
            ->capture_default_str();
        app.add_option("--out-dir", out_dir, "Output directory")->required();
        app.add_option("--jobs", jobs, "Worker threads (0 = all)");
        schedule.add(app);
    }

    void run(std::ostream& out, std::ostream& err, int verbosity) const {
        if (model.empty() == oracle_pdb.empty()) {
            fail(ErrorKind::InvalidConfig, "exactly one of --model and --oracle-pdb is required");
        }
        if (!seq.empty() && !pdb.empty()) fail(ErrorKind::InvalidConfig, "--seq and --pdb are exclusive");

        std::shared_ptr<const CoordinateScore> score;
        std::optional<Structure> native;
        std::size_t pe_width = kDefaultPeWidth;
        if (!model.empty()) {
            auto net = std::make_shared<const PairwiseScoreNet>(PairwiseScoreNet::load(model));
            pe_width = net->config().pe_width;
            score = net_score(net);
        } else {
            native = load_structure(oracle_pdb, chain, err);
            score = oracle_score(*native, schedule.build());
        }

        std::string sequence = seq;
        if (!pdb.empty()) sequence = load_structure(pdb, chain, err).sequence;
        if (sequence.empty() && native) sequence = native->sequence;
        if (sequence.empty()) fail(ErrorKind::InvalidConfig, "no target sequence (use --seq or --pdb)");

        std::optional<Predictions> preds;
        if (!predictions.empty()) preds = load_predictions(predictions);
        if (preds && preds->map.length != sequence.size()) {
            fail(ErrorKind::InvalidInput, "predictions cover " + std::to_string(preds->map.length) +
                                              " residues, sequence has " + std::to_string(sequence.size()));
        }
        const ConditioningBundle bundle = assemble(sequence, preds, {pe_width, parse_mask(mask)});

        SamplerConfig config;
        config.schedule = score->schedule();
        config.iterations_per_stage = stages_t;
        config.reference_step = lambda0;
        config.decoys = decoys;
        config.seed = seed;
        config.snapshot_stride = snapshot_stride;
        if (!hirm_ref.empty()) {
            config.hirm_enabled = true;
            config.hirm_reference = std::make_shared<const DihedralHistogram>(DihedralHistogram::load(hirm_ref));
        }

        const std::size_t stages = config.schedule.size();
        std::vector<std::vector<double>> drift(decoys, std::vector<double>(stages, 0.0));
        std::vector<std::vector<double>> noise(decoys, std::vector<double>(stages, 0.0));
        const auto observe = [&](std::size_t d, const StepStats& s) {
            drift[d][s.stage] += s.drift_norm;
            noise[d][s.stage] += s.noise_norm;
        };
        const auto results = sample_decoys(*score, bundle, config, jobs, observe);

        const fs::path dir = out_dir;
        const fs::path traj_dir = dir / "trajectory";
        ensure_directory(traj_dir);

        io::CsvTable index{{"decoy", "stage", "iteration", "kind", "file"}, {}};
        io::CsvTable stats{{"decoy", "stage", "sigma", "lambda", "mirrored", "mean_drift_norm",
                            "mean_noise_norm"},
                           {}};
        io::CsvTable timing{{"decoy", "stage", "seconds"}, {}};
        const double per_stage = stages_t > 0 ? static_cast<double>(stages_t) : 1.0;
        for (std::size_t d = 0; d < results.size(); ++d) {
            const auto& r = results[d];
            const std::string decoy_name = "decoy_" + std::to_string(d);
            io::write_ca_pdb(r.structure, dir / (decoy_name + ".pdb"));
            std::size_t next_snapshot = 0;
            for (std::size_t k = 0; k < stages; ++k) {
                while (next_snapshot < r.trajectory.snapshots.size() &&
                       r.trajectory.snapshots[next_snapshot].stage == k) {
                    const auto& snap = r.trajectory.snapshots[next_snapshot++];
                    const std::string file = decoy_name + "_stage_" + std::to_string(k) + "_iter_" +
                                             std::to_string(snap.iteration) + ".pdb";
                    io::write_ca_pdb({r.structure.sequence, snap.coords}, traj_dir / file);
                    index.rows.push_back({static_cast<std::int64_t>(d), static_cast<std::int64_t>(k),
                                          static_cast<std::int64_t>(snap.iteration), std::string("snapshot"),
                                          "trajectory/" + file});
                }
                const std::string file = decoy_name + "_stage_" + std::to_string(k) + ".pdb";
                io::write_ca_pdb({r.structure.sequence, r.trajectory.stage_ends[k]}, traj_dir / file);
                index.rows.push_back({static_cast<std::int64_t>(d), static_cast<std::int64_t>(k),
                                      static_cast<std::int64_t>(stages_t), std::string("stage_end"),
                                      "trajectory/" + file});
                stats.rows.push_back({static_cast<std::int64_t>(d), static_cast<std::int64_t>(k),
                                      config.schedule.sigma(k), step_size(config.schedule, k, lambda0),
                                      static_cast<std::int64_t>(r.trajectory.stage_mirrored[k] ? 1 : 0),
                                      drift[d][k] / per_stage, noise[d][k] / per_stage});
                timing.rows.push_back({static_cast<std::int64_t>(d), static_cast<std::int64_t>(k),
                                       r.trajectory.stage_seconds[k]});
            }
            if (verbosity > 0) err << "decoy " << d << " done\n";
        }
        io::emit_csv(index, dir / "trajectory.csv");
        io::emit_csv(stats, dir / "stages.csv");
        // Wall-clock times differ run to run; kept apart so every other output is reproducible.
        io::emit_csv(timing, dir / "timing.csv");

        io::Metadata echo{{"command", "sample"},
                          {"score", model.empty() ? "oracle" : "model"},
                          {"model", model},
                          {"oracle_pdb", oracle_pdb},
                          {"sequence", sequence},
                          {"pdb", pdb},
                          {"chain", chain},
                          {"predictions", predictions},
                          {"predictions_mask", mask},
                          {"decoys", std::to_string(decoys)},
                          {"stages_T", std::to_string(stages_t)},
                          {"lambda0", fmt(lambda0)},
                          {"hirm_ref", hirm_ref},
                          {"seed", std::to_string(seed)},
                          {"snapshot_stride", std::to_string(snapshot_stride)},
                          {"length", std::to_string(sequence.size())}};
        echo.emplace_back("sigmas_levels", std::to_string(stages));
        echo.emplace_back("sigma_first", fmt(config.schedule.sigmas().front()));
        echo.emplace_back("sigma_last", fmt(config.schedule.sigmas().back()));
        io::write_config_echo(echo, dir / "run_config.txt");

        out << "decoys=" << results.size() << '\n';
        out << "out_dir=" << dir.string() << '\n';
        if (native) {
            double worst = 0.0;
            for (const auto& r : results) worst = std::max(worst, rmsd(r.structure.coords, native->coords));
            out << "max_rmsd_to_oracle_native=" << fmt6(worst) << '\n';
        }
    }
};

// ---------------------------------------------------------------------------
// hirm-ref
// ---------------------------------------------------------------------------

struct HirmRefCmd {
    std::string manifest;
    std::size_t bins = kDefaultDihedralBins;
    std::string split = "train";
    std::string out_path;

    void add(CLI::App& app) {
        app.add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
        app.add_option("--bins", bins, "Histogram bins over (-180°, 180°]")->capture_default_str();
        app.add_option("--split", split, "train | valid | test | all")->capture_default_str();
        app.add_option("--out", out_path, "Output histogram tensor")->required();
    }

    void run(std::ostream& out, std::ostream& err) const {
        if (bins == 0) fail(ErrorKind::InvalidConfig, "--bins must be positive");
        const auto data = io::load_manifest(manifest);
        std::vector<io::ManifestEntry> entries;
        if (split == "all") entries = data.entries;
        else if (split == "train") entries = data.split(io::Split::Train);
        else if (split == "valid") entries = data.split(io::Split::Valid);
        else if (split == "test") entries = data.split(io::Split::Test);
        else fail(ErrorKind::InvalidConfig, "unknown split '" + split + "'");

        std::vector<Structure> structures;
        for (const auto& e : entries) structures.push_back(load_structure(e.pdb, e.chain, err));
        if (structures.empty()) fail(ErrorKind::InvalidInput, "no structures in split '" + split + "'");
        const auto histogram = build_reference_histogram(structures, bins);
        histogram.save(out_path);
        io::write_config_echo({{"command", "hirm-ref"},
                               {"manifest", manifest},
                               {"bins", std::to_string(bins)},
                               {"split", split},
                               {"structures", std::to_string(structures.size())},
                               {"out", out_path}},
                              config_echo_path(out_path));

        const auto mode = static_cast<std::size_t>(
            std::max_element(histogram.frequencies.begin(), histogram.frequencies.end()) -
            histogram.frequencies.begin());
        const double width = 360.0 / static_cast<double>(bins);
        double total = 0.0;
        for (double c : histogram.counts) total += c;
        out << "structures=" << structures.size() << '\n';
        out << "dihedrals=" << static_cast<long long>(total) << '\n';
        out << "mode_bin=" << mode << '\n';
        out << "mode_center_degrees=" << fmt6(-180.0 + (static_cast<double>(mode) + 0.5) * width) << '\n';
    }
};

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct MetricSelection {
    bool lddt = false;
    bool gdt = false;
    bool rmsd = false;
};

MetricSelection parse_metrics(const std::string& text) {
    MetricSelection sel;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item == "lddt") sel.lddt = true;
        else if (item == "gdt") sel.gdt = true;
        else if (item == "rmsd") sel.rmsd = true;
        else fail(ErrorKind::InvalidConfig, "unknown metric '" + item + "'");
    }
    if (!sel.lddt && !sel.gdt && !sel.rmsd) fail(ErrorKind::InvalidConfig, "no metrics selected");
    return sel;
}

std::vector<fs::path> list_pdbs(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pdb") files.push_back(entry.path());
    }
    // decoy_2 before decoy_10.
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        const auto as = a.filename().string();
        const auto bs = b.filename().string();
        return as.size() != bs.size() ? as.size() < bs.size() : as < bs;
    });
    return files;
}

struct EvalCmd {
    std::string pred_dir;
    std::string native_path;
    std::string chain = "A";
    std::string metrics = "lddt,gdt,rmsd";
    std::string out_path;

    void add(CLI::App& app) {
        app.add_option("--pred-dir", pred_dir, "Directory of decoy PDBs")->required();
        app.add_option("--native", native_path, "Native PDB")->required();
        app.add_option("--chain", chain, "Native chain identifier")->capture_default_str();
        app.add_option("--metrics", metrics, "Comma list of lddt, gdt, rmsd")->capture_default_str();
        app.add_option("--out", out_path, "Per-decoy metrics CSV")->required();
    }

    void run(std::ostream& out, std::ostream& err) const {
        const MetricSelection sel = parse_metrics(metrics);
        const Structure native = load_structure(native_path, chain, err);
        const auto files = list_pdbs(pred_dir);
        if (files.empty()) fail(ErrorKind::InvalidInput, "no .pdb decoys in " + pred_dir);

        io::CsvTable table{{"decoy"}, {}};
        if (sel.lddt) table.header.push_back("lddt_ca");
        if (sel.gdt) table.header.push_back("gdt_ts");
        if (sel.rmsd) table.header.push_back("rmsd");
        std::vector<std::vector<double>> columns(table.header.size() - 1);

        for (const auto& file : files) {
            const Structure pred = load_structure(file, "", err);
            if (pred.length() != native.length()) {
                fail(ErrorKind::InvalidInput, file.filename().string() + " has " +
                                                  std::to_string(pred.length()) + " residues, native has " +
                                                  std::to_string(native.length()));
            }
            std::vector<io::CsvField> row{file.stem().string()};
            std::vector<double> values;
            if (sel.lddt) values.push_back(lddt_ca(pred, native));
            if (sel.gdt) values.push_back(gdt_ts(pred, native));
            if (sel.rmsd) values.push_back(scorefold::rmsd(pred, native));
            for (std::size_t c = 0; c < values.size(); ++c) {
                row.push_back(values[c]);
                columns[c].push_back(values[c]);
            }
            table.rows.push_back(std::move(row));
        }
        io::emit_csv(table, out_path);

        io::CsvTable summary{{"decoys"}, {{static_cast<std::int64_t>(files.size())}}};
        const std::map<std::string, std::string> labels{
            {"lddt_ca", "lDDT-Ca"}, {"gdt_ts", "GDT-TS"}, {"rmsd", "RMSD"}};
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& label = labels.at(table.header[c + 1]);
            double sum = 0.0;
            for (double v : columns[c]) sum += v;
            const double mean = sum / static_cast<double>(columns[c].size());
            const double max = *std::max_element(columns[c].begin(), columns[c].end());
            summary.header.push_back(label + "-Avg");
            summary.header.push_back(label + "-Max");
            summary.rows[0].push_back(mean);
            summary.rows[0].push_back(max);
            out << label << "-Avg=" << fmt6(mean) << '\n' << label << "-Max=" << fmt6(max) << '\n';
        }
        const fs::path summary_path = sibling(out_path, "_summary.csv");
        io::emit_csv(summary, summary_path);
        io::write_config_echo({{"command", "eval"},
                               {"pred_dir", pred_dir},
                               {"native", native_path},
                               {"chain", chain},
                               {"metrics", metrics},
                               {"out", out_path},
                               {"summary", summary_path.string()}},
                              config_echo_path(out_path));
        out << "decoys=" << files.size() << '\n';
    }
};

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

std::size_t to_index(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const long long value = std::stoll(text, &used);
        if (used != text.size() || value < 0) throw std::invalid_argument(text);
        return static_cast<std::size_t>(value);
    } catch (const std::exception&) {
        fail(ErrorKind::Parse, std::string("bad ") + what + " value '" + text + "'");
    }
}

std::map<std::string, std::size_t> column_index(const std::vector<std::string>& header,
                                                std::initializer_list<const char*> required,
                                                const fs::path& file) {
    std::map<std::string, std::size_t> cols;
    for (std::size_t c = 0; c < header.size(); ++c) cols[header[c]] = c;
    for (const char* name : required) {
        if (!cols.count(name)) fail(ErrorKind::Format, file.string() + ": missing column '" + name + "'");
    }
    return cols;
}

struct ReportCmd {
    std::string trajectory_dir;
    std::string native_path;
    std::string chain = "A";
    std::string out_path;

    void add(CLI::App& app) {
        app.add_option("--trajectory-dir", trajectory_dir, "Output directory of a sample run")->required();
        app.add_option("--native", native_path, "Native PDB")->required();
        app.add_option("--chain", chain, "Native chain identifier")->capture_default_str();
        app.add_option("--out", out_path, "Per-stage CSV")->required();
    }

    void run(std::ostream& out, std::ostream& err) const {
        const fs::path dir = trajectory_dir;
        const fs::path index_path = dir / "trajectory.csv";
        if (!fs::exists(index_path)) fail(ErrorKind::Io, "no trajectory index in " + dir.string());
        const auto index = io::read_csv(index_path);
        if (index.empty()) fail(ErrorKind::Format, index_path.string() + " is empty");
        const auto cols = column_index(index[0], {"decoy", "stage", "kind", "file"}, index_path);

        const Structure native = load_structure(native_path, chain, err);
        std::map<std::size_t, std::vector<double>> lddt, gdt;
        std::set<std::size_t> decoys;
        for (std::size_t r = 1; r < index.size(); ++r) {
            const auto& row = index[r];
            if (row.size() != index[0].size()) fail(ErrorKind::Format, index_path.string() + ": ragged row");
            if (row[cols.at("kind")] != "stage_end") continue;
            const std::size_t stage = to_index(row[cols.at("stage")], "stage");
            decoys.insert(to_index(row[cols.at("decoy")], "decoy"));
            const fs::path file = dir / row[cols.at("file")];
            if (!fs::exists(file)) fail(ErrorKind::Io, "missing snapshot " + file.string());
            const Structure pred = load_structure(file, "", err);
            if (pred.length() != native.length()) {
                fail(ErrorKind::InvalidInput, "snapshot length differs from native: " + file.string());
            }
            lddt[stage].push_back(lddt_ca(pred, native));
            gdt[stage].push_back(gdt_ts(pred, native));
        }
        if (lddt.empty()) fail(ErrorKind::InvalidInput, "no stage-end snapshots in " + dir.string());

        std::map<std::size_t, std::vector<double>> seconds;
        const fs::path timing_path = dir / "timing.csv";
        if (fs::exists(timing_path)) {
            const auto timing = io::read_csv(timing_path);
            if (!timing.empty()) {
                const auto tc = column_index(timing[0], {"stage", "seconds"}, timing_path);
                for (std::size_t r = 1; r < timing.size(); ++r) {
                    seconds[to_index(timing[r][tc.at("stage")], "stage")].push_back(
                        std::stod(timing[r][tc.at("seconds")]));
                }
            }
        }

        const auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        io::CsvTable table{{"stage", "lddt", "gdt", "seconds"}, {}};
        double total_seconds = 0.0;
        for (const auto& [stage, values] : lddt) {
            io::CsvField secs = std::string();
            if (seconds.count(stage)) {
                secs = mean(seconds[stage]);
                total_seconds += mean(seconds[stage]);
            }
            table.rows.push_back({static_cast<std::int64_t>(stage), mean(values), mean(gdt[stage]), secs});
        }
        io::emit_csv(table, out_path);

        std::size_t iterations = 0;
        const fs::path run_config = dir / "run_config.txt";
        if (fs::exists(run_config)) {
            for (const auto& [key, value] : io::read_config_echo(run_config)) {
                if (key == "stages_T") iterations = to_index(value, "stages_T");
            }
        }
        const double total_iterations = static_cast<double>(iterations * lddt.size());
        io::CsvTable wall{{"length", "decoys", "stages", "iterations_per_stage", "seconds_per_decoy",
                           "seconds_per_iteration"},
                          {{static_cast<std::int64_t>(native.length()), static_cast<std::int64_t>(decoys.size()),
                            static_cast<std::int64_t>(lddt.size()), static_cast<std::int64_t>(iterations),
                            total_seconds,
                            total_iterations > 0 ? total_seconds / total_iterations : 0.0}}};
        const fs::path wall_path = sibling(out_path, "_wallclock.csv");
        io::emit_csv(wall, wall_path);
        io::write_config_echo({{"command", "report"},
                               {"trajectory_dir", trajectory_dir},
                               {"native", native_path},
                               {"chain", chain},
                               {"out", out_path},
                               {"wallclock", wall_path.string()}},
                              config_echo_path(out_path));

        out << "stages=" << lddt.size() << '\n';
        out << "final_lddt=" << fmt6(mean(lddt.rbegin()->second)) << '\n';
        out << "final_gdt=" << fmt6(mean(gdt.rbegin()->second)) << '\n';
    }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Score-based Cα-trace structure sampling", "scorefold"};
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "Progress messages on stderr");

    ScheduleCmd schedule;
    PerturbCmd perturb_cmd;
    TrainCmd train_cmd;
    SampleCmd sample;
    HirmRefCmd hirm;
    EvalCmd eval;
    ReportCmd report;

    auto* schedule_app = app.add_subcommand("schedule", "Print the noise schedule and step sizes");
    schedule.add(*schedule_app);
    auto* perturb_app = app.add_subcommand("perturb", "Add Gaussian noise to a Cα trace");
    perturb_cmd.add(*perturb_app);
    auto* train_app = app.add_subcommand("train", "Train the pairwise score network");
    train_cmd.add(*train_app);
    auto* sample_app = app.add_subcommand("sample", "Generate decoys by annealed Langevin dynamics");
    sample.add(*sample_app);
    auto* hirm_app = app.add_subcommand("hirm-ref", "Build a reference Cα dihedral histogram");
    hirm.add(*hirm_app);
    auto* eval_app = app.add_subcommand("eval", "Score decoys against a native structure");
    eval.add(*eval_app);
    auto* report_app = app.add_subcommand("report", "Per-stage quality and timing of a sample run");
    report.add(*report_app);

    try {
        const std::size_t env_jobs = default_jobs();
        train_cmd.jobs = env_jobs;
        sample.jobs = env_jobs;
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (schedule_app->parsed()) schedule.run(out);
        else if (perturb_app->parsed()) perturb_cmd.run(out, err);
        else if (train_app->parsed()) train_cmd.run(out, err, verbosity);
        else if (sample_app->parsed()) sample.run(out, err, verbosity);
        else if (hirm_app->parsed()) hirm.run(out, err);
        else if (eval_app->parsed()) eval.run(out, err);
        else if (report_app->parsed()) report.run(out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.numerical() ? kExitNumerical : kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"scorefold"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace scorefold::cli
