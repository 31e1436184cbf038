#include "pcam/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "pcam/augment.hpp"
#include "pcam/cam.hpp"
#include "pcam/errors.hpp"
#include "pcam/imageio.hpp"
#include "pcam/network.hpp"
#include "pcam/synthdata.hpp"
#include "pcam/train.hpp"

namespace fs = std::filesystem;

namespace pcam {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

void print_metrics(std::ostream& out, const Metrics& m,
                   const std::vector<std::string>& class_names) {
  std::size_t total = 0;
  for (const auto& row : m.confusion)
    for (std::size_t v : row) total += v;
  out << "samples " << total << "\n";
  out << "overall_accuracy " << fmt(m.overall_accuracy) << "\n";
  for (std::size_t c = 0; c < class_names.size(); ++c)
    out << "accuracy_" << class_names[c] << " "
        << fmt(m.per_class_accuracy[c]) << "\n";
  out << "confusion (rows true, cols predicted):\n";
  for (const auto& row : m.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? " " : "  ") << std::setw(6) << row[j];
    out << "\n";
  }
}

void write_metrics_csv(const std::string& path, const Metrics& m,
                       const std::vector<std::string>& class_names) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "overall_accuracy," << fmt(m.overall_accuracy) << "\n";
  for (std::size_t c = 0; c < class_names.size(); ++c)
    out << "accuracy_" << class_names[c] << ","
        << fmt(m.per_class_accuracy[c]) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "epoch,batch,loss,accuracy\n";
  for (const BatchRecord& r : history.batches)
    out << r.epoch << "," << r.batch << "," << fmt(r.loss) << ","
        << fmt(r.accuracy) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

void report_training(std::ostream& out, const TrainHistory& history) {
  out << "epochs_done " << history.epochs_done
      << (history.stopped_early ? " (stopped early)" : "") << "\n";
  if (!history.batches.empty()) {
    const BatchRecord& last = history.batches.back();
    out << "final_batch loss " << fmt(last.loss) << " accuracy "
        << fmt(last.accuracy) << "\n";
  }
}

struct GenDataArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t patches_per_class = 500;
  std::size_t patch_size = 64;
  std::size_t full_images = 50;
  std::size_t full_size = 256;
  std::size_t pretext_per_class = 200;
};

int run_gen_data(const GenDataArgs& a, std::ostream& out) {
  RngState rng(a.seed + 3);  // data-generation stream

  Dataset pretext = gen_pretext_dataset(rng, a.pretext_per_class,
                                        a.patch_size);
  Dataset patches = gen_patch_dataset(rng, a.patches_per_class, a.patch_size);

  auto class_dir = [&](const std::string& group, const std::string& cls) {
    const fs::path dir = fs::path(a.out_dir) / group / cls;
    fs::create_directories(dir);
    return dir;
  };

  std::vector<std::size_t> counter(pretext.class_names.size(), 0);
  for (const Sample& s : pretext.samples) {
    const fs::path dir = class_dir("pretext", pretext.class_names[s.label]);
    write_pgm(s.image,
              dir / ("pretext_" + zero_pad(counter[s.label]++, 4) + ".pgm"));
  }
  counter.assign(patches.class_names.size(), 0);
  for (const Sample& s : patches.samples) {
    const fs::path dir = class_dir("patches", patches.class_names[s.label]);
    write_pgm(s.image,
              dir / ("patch_" + zero_pad(counter[s.label]++, 4) + ".pgm"));
  }

  const std::vector<std::string> full_names = {"calcification", "mass"};
  const std::uint64_t full_base = rng_next_u64(rng);
  counter.assign(2, 0);
  for (std::size_t i = 0; i < a.full_images; ++i) {
    RngState sub(full_base ^ static_cast<std::uint64_t>(i));
    const Abnormality kind =
        i % 2 == 0 ? Abnormality::Calcification : Abnormality::Mass;
    const FullImageCase fic = gen_full_image(sub, a.full_size, a.full_size,
                                             kind);
    const fs::path dir = class_dir("full", full_names[fic.label]);
    const std::string stem = "full_" + zero_pad(counter[fic.label]++, 4);
    write_pgm(fic.image, dir / (stem + ".pgm"));
    write_pgm(fic.mask, dir / (stem + ".mask.pgm"));
  }

  out << "pretext " << pretext.samples.size() << " patches "
      << patches.samples.size() << " full " << a.full_images << "\n";
  out << "wrote " << a.out_dir << "\n";
  return 0;
}

struct PretrainArgs {
  std::string data_dir, arch = "miniresnet", out_path, history_csv;
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 1e-4;
};

int run_pretrain(const PretrainArgs& a, std::ostream& out) {
  const Dataset data = load_dataset_dir(a.data_dir);
  RngState init_rng(a.seed);
  Network net = build_preset(a.arch, 1, data.class_names.size(), init_rng,
                             data.samples[0].image.shape()[1],
                             data.samples[0].image.shape()[2]);
  net.class_names = data.class_names;

  TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.base_lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.seed = a.seed;
  RngState shuffle_rng(a.seed + 2);
  const TrainHistory history = train_loop(net, data, cfg, shuffle_rng);
  report_training(out, history);
  if (!a.history_csv.empty()) write_history_csv(a.history_csv, history);

  save_network(net, a.out_path);
  out << "saved " << a.out_path << "\n";
  return 0;
}

struct FinetuneArgs {
  std::string base_path, data_dir, out_path, history_csv;
  std::uint64_t seed = 0;
  double head_lr_factor = 20.0;
  bool freeze_trunk = false;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 1e-4;
};

int run_finetune(const FinetuneArgs& a, std::ostream& out) {
  const Network base = load_network(a.base_path);
  const Dataset data = load_dataset_dir(a.data_dir);
  RngState init_rng(a.seed);
  Network net = replace_head(base, data.class_names, init_rng,
                             a.head_lr_factor);
  if (a.freeze_trunk)  // trunk = everything before GAP
    for (std::size_t i = 0; i + 3 < net.layers.size(); ++i)
      net.layers[i].frozen = true;

  RngState split_rng(a.seed + 2);
  auto [train_set, test_set] = split_85_15(data, split_rng);

  TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.base_lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.seed = a.seed;
  const TrainHistory history = train_loop(net, train_set, cfg, split_rng);
  report_training(out, history);
  if (!a.history_csv.empty()) write_history_csv(a.history_csv, history);

  out << "held-out metrics:\n";
  print_metrics(out, evaluate(net, test_set), net.class_names);
  save_network(net, a.out_path);
  out << "saved " << a.out_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string model_path, data_dir, csv_path;
  std::uint64_t seed = 0;
  std::size_t crossval_k = 0;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 1e-4;
  double head_lr_factor = 20.0;
};

int run_crossval(const EvalArgs& a, std::ostream& out) {
  const Network base = load_network(a.model_path);
  const Dataset data = load_dataset_dir(a.data_dir);
  TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.base_lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.seed = a.seed;
  const CrossvalResult cv =
      cross_validate(base, data, a.crossval_k, cfg, a.head_lr_factor);
  for (std::size_t f = 0; f < cv.fold_accuracies.size(); ++f)
    out << "fold_" << f << "_accuracy " << fmt(cv.fold_accuracies[f]) << "\n";
  out << "mean_accuracy " << fmt(cv.mean_accuracy) << "\n";
  if (!a.csv_path.empty()) {
    std::ofstream csv(a.csv_path, std::ios::trunc);
    if (!csv) throw DataError("cannot open for writing: " + a.csv_path);
    for (std::size_t f = 0; f < cv.fold_accuracies.size(); ++f)
      csv << "fold_" << f << "_accuracy," << fmt(cv.fold_accuracies[f])
          << "\n";
    csv << "mean_accuracy," << fmt(cv.mean_accuracy) << "\n";
    if (!csv) throw DataError("write failed: " + a.csv_path);
  }
  return 0;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.crossval_k > 0) return run_crossval(a, out);
  const Network net = load_network(a.model_path);
  const Dataset data = load_dataset_dir(a.data_dir);
  if (data.class_names != net.class_names)
    throw DataError("eval: dataset classes do not match the model");
  const Metrics m = evaluate(net, data);
  print_metrics(out, m, net.class_names);
  if (!a.csv_path.empty()) write_metrics_csv(a.csv_path, m, net.class_names);
  return 0;
}

struct CamArgs {
  std::string model_path, image_path, class_name, out_path, overlay_path,
      mask_path;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

int run_cam(const CamArgs& a, std::ostream& out, std::ostream& err) {
  const Network net = load_network(a.model_path);
  const Tensor image = read_pgm(a.image_path);

  std::optional<std::size_t> class_index;
  if (!a.class_name.empty()) {
    const auto it = std::find(net.class_names.begin(), net.class_names.end(),
                              a.class_name);
    if (it == net.class_names.end()) {
      err << "unknown class '" << a.class_name << "'; model classes:";
      for (const std::string& name : net.class_names) err << " " << name;
      err << "\n";
      return 1;
    }
    class_index = static_cast<std::size_t>(it - net.class_names.begin());
  }

  const Heatmap raw = compute_cam(net, image, class_index);
  const Heatmap up =
      upsample_bilinear(raw, image.shape()[1], image.shape()[2]);
  const Heatmap norm = normalize_heatmap(up);
  write_pgm(norm.values, a.out_path);
  out << "class " << net.class_names[raw.class_index] << "\n";
  if (!a.overlay_path.empty())
    write_overlay_ppm(image, norm.values, a.overlay_path, 0.5);
  if (!a.mask_path.empty()) {
    Tensor mask = read_pgm(a.mask_path);
    if (!mask.same_shape(image))
      throw DataError("cam: mask size does not match image: " + a.mask_path);
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = mask[i] > 0.5 ? 1.0 : 0.0;
    const LocScore score = localization_score(norm, mask, a.threshold);
    out << "hit=" << (score.hit ? "true" : "false") << " iou="
        << fmt(score.iou) << "\n";
  }
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"synthetic mammography patch CNN with CAM localization"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-data", "generate synthetic datasets");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "rng seed")->required();
  gen_cmd->add_option("--patches-per-class", gen.patches_per_class,
                      "classification patches per class");
  gen_cmd->add_option("--patch-size", gen.patch_size, "patch side length");
  gen_cmd->add_option("--full-images", gen.full_images,
                      "full images with masks");
  gen_cmd->add_option("--full-size", gen.full_size, "full image side length");
  gen_cmd->add_option("--pretext-per-class", gen.pretext_per_class,
                      "pretext samples per class");

  PretrainArgs pre;
  CLI::App* pre_cmd =
      app.add_subcommand("pretrain", "train a preset on the pretext task");
  pre_cmd->add_option("--data", pre.data_dir, "pretext dataset directory")
      ->required();
  pre_cmd->add_option("--arch", pre.arch, "minivgg|miniresnet")
      ->check(CLI::IsMember({"minivgg", "miniresnet"}));
  pre_cmd->add_option("--out", pre.out_path, "model output path")->required();
  pre_cmd->add_option("--seed", pre.seed, "rng seed")->required();
  pre_cmd->add_option("--epochs", pre.epochs, "max epochs");
  pre_cmd->add_option("--batch", pre.batch, "batch size");
  pre_cmd->add_option("--lr", pre.lr, "base learning rate");
  pre_cmd->add_option("--history-csv", pre.history_csv,
                      "write per-batch history CSV");

  FinetuneArgs fin;
  CLI::App* fin_cmd = app.add_subcommand(
      "finetune", "replace the head and fine-tune on labeled patches");
  fin_cmd->add_option("--base", fin.base_path, "pretrained model")->required();
  fin_cmd->add_option("--data", fin.data_dir, "patch dataset directory")
      ->required();
  fin_cmd->add_option("--out", fin.out_path, "model output path")->required();
  fin_cmd->add_option("--seed", fin.seed, "rng seed")->required();
  fin_cmd->add_option("--head-lr-factor", fin.head_lr_factor,
                      "learning-rate factor for the new head");
  fin_cmd->add_flag("--freeze-trunk", fin.freeze_trunk,
                    "freeze all layers except the new head");
  fin_cmd->add_option("--epochs", fin.epochs, "max epochs");
  fin_cmd->add_option("--batch", fin.batch, "batch size");
  fin_cmd->add_option("--lr", fin.lr, "base learning rate");
  fin_cmd->add_option("--history-csv", fin.history_csv,
                      "write per-batch history CSV");

  EvalArgs ev;
  CLI::App* ev_cmd =
      app.add_subcommand("eval", "evaluate a model on a dataset");
  ev_cmd->add_option("--model", ev.model_path, "model path")->required();
  ev_cmd->add_option("--data", ev.data_dir, "dataset directory")->required();
  ev_cmd->add_option("--seed", ev.seed, "rng seed")->required();
  ev_cmd->add_option("--crossval", ev.crossval_k,
                     "run K-fold cross-validation instead");
  ev_cmd->add_option("--csv", ev.csv_path, "write metrics CSV");
  ev_cmd->add_option("--epochs", ev.epochs, "max epochs (crossval)");
  ev_cmd->add_option("--batch", ev.batch, "batch size (crossval)");
  ev_cmd->add_option("--lr", ev.lr, "base learning rate (crossval)");
  ev_cmd->add_option("--head-lr-factor", ev.head_lr_factor,
                     "head factor (crossval)");

  EvalArgs cv;
  cv.crossval_k = 5;
  CLI::App* cv_cmd = app.add_subcommand(
      "crossval", "K-fold cross-validation from a pretrained base");
  cv_cmd->add_option("--base", cv.model_path, "pretrained model")->required();
  cv_cmd->add_option("--data", cv.data_dir, "dataset directory")->required();
  cv_cmd->add_option("--seed", cv.seed, "rng seed")->required();
  cv_cmd->add_option("--k", cv.crossval_k, "number of folds");
  cv_cmd->add_option("--csv", cv.csv_path, "write metrics CSV");
  cv_cmd->add_option("--epochs", cv.epochs, "max epochs");
  cv_cmd->add_option("--batch", cv.batch, "batch size");
  cv_cmd->add_option("--lr", cv.lr, "base learning rate");
  cv_cmd->add_option("--head-lr-factor", cv.head_lr_factor, "head factor");

  CamArgs cam;
  CLI::App* cam_cmd = app.add_subcommand(
      "cam", "class activation heatmap for one image");
  cam_cmd->add_option("--model", cam.model_path, "model path")->required();
  cam_cmd->add_option("--image", cam.image_path, "input PGM image")
      ->required();
  cam_cmd->add_option("--seed", cam.seed, "rng seed")->required();
  cam_cmd->add_option("--class", cam.class_name,
                      "class name (default: predicted)");
  cam_cmd->add_option("--out", cam.out_path, "heatmap PGM output")
      ->required();
  cam_cmd->add_option("--overlay", cam.overlay_path, "overlay PPM output");
  cam_cmd->add_option("--mask", cam.mask_path,
                      "ground-truth mask for localization scoring");
  cam_cmd->add_option("--threshold", cam.threshold,
                      "region threshold on the normalized map");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen, out);
    if (pre_cmd->parsed()) return run_pretrain(pre, out);
    if (fin_cmd->parsed()) return run_finetune(fin, out);
    if (ev_cmd->parsed()) return run_eval(ev, out);
    if (cv_cmd->parsed()) return run_crossval(cv, out);
    if (cam_cmd->parsed()) return run_cam(cam, out, err);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace pcam
