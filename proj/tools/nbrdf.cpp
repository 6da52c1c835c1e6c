// Command-line surface: dataset generation, training, projection, layering,
// sampler fitting, rendering and image comparison, bound into reproducible
// pipelines with per-run manifests.
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "nbrdf/data/dataset.hpp"
#include "nbrdf/neural/layering.hpp"
#include "nbrdf/neural/sampler.hpp"
#include "nbrdf/render/pathtracer.hpp"
#include "nbrdf/texture/latent_texture.hpp"

using nlohmann::json;
using namespace nbrdf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

std::string hash_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot hash missing file: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in)
            break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// Every run records its command line, seed and output hashes next to its
// primary artifact, so any result can be regenerated from the manifest.
void emit_manifest(const std::string &primary_out, const std::string &command, uint64_t seed,
                   const std::vector<std::string> &outputs) {
    json m;
    m["command"] = command;
    m["seed"] = seed;
    m["format_versions"] = {{"nbds", 1}, {"nbwt", 1}, {"nblv", 1}, {"nblt3", 3}, {"nblt", 1}};
    json files = json::object();
    for (const auto &f : outputs)
        files[f] = hash_file(f);
    m["outputs"] = files;
    std::ofstream out(primary_out + ".manifest.json");
    out << m.dump(2) << "\n";
}

void write_loss_csv(const std::string &path, const std::vector<double> &train,
                    const std::vector<double> &val) {
    if (path.empty())
        return;
    std::ofstream out(path);
    out << "epoch,train,val\n";
    for (size_t e = 0; e < train.size(); ++e)
        out << e << "," << train[e] << "," << (e < val.size() ? val[e] : 0.0) << "\n";
}

std::string command_string(int argc, char **argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i)
            s += " ";
        s += argv[i];
    }
    return s;
}

Decoder load_decoder(const std::string &path) {
    Decoder d;
    d.graph = build_decoder();
    d.weights = nn::load_weights(path, d.graph);
    return d;
}

std::vector<double> parse_scalars(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(std::stod(tok));
    return out;
}

// Joint projection of every single-channel record in [begin, begin+count).
std::vector<LatentBrdf> project_records(const Decoder &dec, const Dataset &ds, int begin,
                                        int count, const ProjectionConfig &cfg) {
    auto grid = ds.grid();
    std::vector<TargetSampler> targets;
    for (int k = 0; k < count; ++k)
        targets.push_back(target_from_grid(grid, ds.records[begin + k].values));
    auto latents = project_channels(dec, targets, cfg);
    std::vector<LatentBrdf> out;
    for (auto &l : latents) {
        LatentBrdf lb(1);
        std::copy(l.begin(), l.end(), lb.channel(0));
        out.push_back(lb);
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Neural BRDF toolkit: latent-space BRDF representation, "
                 "layering, sampling and rendering"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file ('#' comments)");
    app.allow_config_extras(false);

    int threads = 0;
    bool print_config = false;
    app.add_option("--threads", threads, "worker threads (0 = all logical cores)");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");

    std::string cmd_line = command_string(argc, argv);

    // ---- gen-dataset ----
    auto *gen = app.add_subcommand("gen-dataset", "tabulate the BRDF training corpus");
    std::string gen_preset = "desk", gen_out;
    DatasetManifest gm = desk_manifest();
    gen->add_option("--preset", gen_preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    gen->add_option("--out", gen_out, "output .nbds file")->required();
    gen->add_option("--seed", gm.seed, "RNG seed");
    int gen_conductors = -1, gen_dielectrics = -1, gen_two = -1, gen_three = -1, gen_val = -1;
    int gen_ntheta = -1, gen_nphi = -1, gen_paths = -1;
    gen->add_option("--conductors", gen_conductors, "conductor record count");
    gen->add_option("--dielectrics", gen_dielectrics, "dielectric record count");
    gen->add_option("--two-layer", gen_two, "two-layer record count");
    gen->add_option("--three-layer", gen_three, "three-layer record count");
    gen->add_option("--val", gen_val, "two-layer validation tail size");
    gen->add_option("--n-theta", gen_ntheta, "grid theta strata per hemisphere");
    gen->add_option("--n-phi", gen_nphi, "grid phi strata per hemisphere");
    gen->add_option("--mc-paths", gen_paths, "oracle paths per direction pair");

    // ---- train ----
    auto *train = app.add_subcommand("train", "train decoder | layering | sampler");
    std::string train_which;
    train->add_option("which", train_which, "decoder | layering | sampler")
        ->required()
        ->check(CLI::IsMember({"decoder", "layering", "sampler"}));
    std::string tr_dataset, tr_out, tr_out_latents, tr_ckpt, tr_csv;
    std::string tr_triples, tr_finetune, tr_latents, tr_decoder;
    DecoderTrainConfig dcfg;
    LayeringTrainConfig lcfg;
    SamplerTrainConfig scfg;
    int tr_epochs = -1, tr_batch = -1;
    double tr_lr = -1;
    uint64_t tr_seed = 1;
    int gndf_res = 16, gndf_wi = 8;
    train->add_option("--dataset", tr_dataset, "dataset .nbds (decoder)");
    train->add_option("--triples", tr_triples, "training triples .nblt3 (layering)");
    train->add_option("--fine-tune", tr_finetune, "three-layer triples .nblt3 (layering)");
    train->add_option("--latents", tr_latents, "training latents .nblv (sampler)");
    train->add_option("--decoder-weights", tr_decoder, "decoder .nbwt (sampler)");
    train->add_option("--out", tr_out, "output weights .nbwt")->required();
    train->add_option("--out-latents", tr_out_latents, "trained latents .nblv (decoder)");
    train->add_option("--epochs", tr_epochs, "epoch count");
    train->add_option("--batch", tr_batch, "batch size");
    train->add_option("--lr", tr_lr, "initial learning rate");
    train->add_option("--seed", tr_seed, "RNG seed");
    train->add_option("--checkpoint-dir", tr_ckpt, "per-epoch checkpoint directory (decoder)");
    train->add_option("--loss-csv", tr_csv, "per-epoch loss CSV path");
    train->add_option("--gndf-res", gndf_res, "GNDF grid resolution (sampler)");
    train->add_option("--gndf-wi", gndf_wi, "GNDF incoming strata per axis (sampler)");

    // ---- project ----
    auto *project = app.add_subcommand("project", "optimize a latent for a target BRDF");
    std::string pr_dataset, pr_decoder, pr_out, pr_conductor, pr_dielectric;
    int pr_record = -1;
    ProjectionConfig pcfg;
    project->add_option("--dataset", pr_dataset, "dataset .nbds with the target record");
    project->add_option("--record", pr_record, "record index in the dataset");
    project->add_option("--conductor", pr_conductor, "alpha,r0 analytic target");
    project->add_option("--dielectric", pr_dielectric, "alpha,eta analytic target");
    project->add_option("--decoder-weights", pr_decoder, "decoder .nbwt")->required();
    project->add_option("--out", pr_out, "output latent .nblv")->required();
    project->add_option("--steps", pcfg.max_steps, "optimization step cap");
    project->add_option("--batch", pcfg.batch, "direction pairs per step");
    project->add_option("--lr", pcfg.lr, "latent learning rate");
    project->add_option("--seed", pcfg.seed, "RNG seed");

    // ---- make-triples ----
    auto *triples = app.add_subcommand(
        "make-triples", "project component latents and assemble layering supervision");
    std::string mt_dataset, mt_decoder, mt_latents, mt_out, mt_out_three;
    ProjectionConfig mtcfg;
    triples->add_option("--dataset", mt_dataset, "dataset .nbds")->required();
    triples->add_option("--decoder-weights", mt_decoder, "decoder .nbwt")->required();
    triples->add_option("--latents", mt_latents, "trained two-layer latents .nblv")->required();
    triples->add_option("--out", mt_out, "two-layer triples .nblt3")->required();
    triples->add_option("--out-three", mt_out_three, "three-layer fine-tune triples .nblt3");
    triples->add_option("--steps", mtcfg.max_steps, "projection step cap");
    triples->add_option("--batch", mtcfg.batch, "pairs per projection step");
    triples->add_option("--seed", mtcfg.seed, "RNG seed");

    // ---- layer ----
    auto *layer_cmd = app.add_subcommand("layer", "apply the layering operator in latent space");
    std::string ly_net, ly_top, ly_bottom, ly_out, ly_albedo = "1";
    double ly_sigma_t = 0;
    layer_cmd->add_option("--net", ly_net, "layering weights .nbwt")->required();
    layer_cmd->add_option("--top", ly_top, "top latent .nblv")->required();
    layer_cmd->add_option("--bottom", ly_bottom, "bottom latent .nblv")->required();
    layer_cmd->add_option("--albedo", ly_albedo, "medium albedo, one value per channel");
    layer_cmd->add_option("--sigma-t", ly_sigma_t, "medium extinction");
    layer_cmd->add_option("--out", ly_out, "output latent .nblv")->required();

    // ---- fit-sampler ----
    auto *fit = app.add_subcommand("fit-sampler", "cache proxy parameters for a latent");
    std::string fs_net, fs_latents, fs_out;
    fit->add_option("--sampler", fs_net, "sampler weights .nbwt")->required();
    fit->add_option("--latents", fs_latents, "latent .nblv")->required();
    fit->add_option("--out", fs_out, "parameter cache .json");

    // ---- render ----
    auto *render_cmd = app.add_subcommand("render", "path-trace a scene");
    std::string rd_scene, rd_out, rd_png, rd_strategy = "mis", rd_stats;
    RenderConfig rcfg;
    double rd_exposure = 1.0;
    render_cmd->add_option("--scene", rd_scene, "scene description file")->required();
    render_cmd->add_option("--out", rd_out, "output .pfm")->required();
    render_cmd->add_option("--png", rd_png, "optional tonemapped .png");
    render_cmd->add_option("--exposure", rd_exposure, "tonemap exposure");
    render_cmd->add_option("--spp", rcfg.spp, "samples per pixel");
    render_cmd->add_option("--strategy", rd_strategy, "light | brdf | mis")
        ->check(CLI::IsMember({"light", "brdf", "mis"}));
    render_cmd->add_option("--seed", rcfg.seed, "RNG seed");
    render_cmd->add_option("--depth", rcfg.max_depth, "maximum path depth");
    render_cmd->add_flag("--audit", rcfg.audit_pdf, "verify sampler pdfs used in MIS");
    render_cmd->add_option("--stats-out", rd_stats, "variance/audit stats .json");

    // ---- lobe ----
    auto *lobe = app.add_subcommand("lobe", "outgoing lobe image for a fixed incidence");
    std::string lb_decoder, lb_latents, lb_out, lb_png, lb_conductor, lb_dielectric;
    double lb_theta = 0, lb_exposure = 1.0;
    int lb_res = 128;
    lobe->add_option("--decoder-weights", lb_decoder, "decoder .nbwt");
    lobe->add_option("--latent", lb_latents, "latent .nblv");
    lobe->add_option("--conductor", lb_conductor, "alpha,r0 analytic lobe");
    lobe->add_option("--dielectric", lb_dielectric, "alpha,eta analytic lobe");
    lobe->add_option("--theta-i", lb_theta, "incidence angle, degrees");
    lobe->add_option("--res", lb_res, "image resolution");
    lobe->add_option("--out", lb_out, "output .pfm")->required();
    lobe->add_option("--png", lb_png, "optional tonemapped .png");
    lobe->add_option("--exposure", lb_exposure, "tonemap exposure");

    // ---- compare ----
    auto *compare = app.add_subcommand("compare", "MSE and relative L1 between two images");
    std::string cp_a, cp_b;
    compare->add_option("a", cp_a, "test image .pfm")->required();
    compare->add_option("b", cp_b, "reference image .pfm")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (threads > 0)
        omp_set_num_threads(threads);
    if (print_config) {
        std::cout << app.config_to_str(true, true);
        return kExitOk;
    }

    try {
        if (*gen) {
            uint64_t seed = gm.seed;
            gm = gen_preset == "paper" ? paper_manifest() : desk_manifest();
            gm.seed = seed;
            if (gen_conductors >= 0)
                gm.n_conductor = gen_conductors;
            if (gen_dielectrics >= 0)
                gm.n_dielectric = gen_dielectrics;
            if (gen_two >= 0)
                gm.n_two_layer = gen_two;
            if (gen_three >= 0)
                gm.n_three_layer = gen_three;
            if (gen_val >= 0)
                gm.n_two_layer_val = gen_val;
            if (gen_ntheta > 0)
                gm.n_theta = gen_ntheta;
            if (gen_nphi > 0)
                gm.n_phi = gen_nphi;
            if (gen_paths > 0)
                gm.mc_paths = gen_paths;
            generate_dataset(gm, gen_out);
            emit_manifest(gen_out, cmd_line, gm.seed, {gen_out});
            std::cout << "wrote " << gen_out << " ("
                      << gm.n_conductor + gm.n_dielectric + gm.n_two_layer + gm.n_three_layer
                      << " records)\n";
        } else if (*train) {
            std::vector<std::string> outputs{tr_out};
            if (train_which == "decoder") {
                if (tr_dataset.empty())
                    throw FormatError("train decoder requires --dataset");
                Dataset ds = load_dataset(tr_dataset);
                dcfg.seed = tr_seed;
                dcfg.checkpoint_dir = tr_ckpt;
                dcfg.log = &std::cerr;
                if (tr_epochs > 0)
                    dcfg.epochs = tr_epochs;
                if (tr_batch > 0)
                    dcfg.batch_size = tr_batch;
                if (tr_lr > 0)
                    dcfg.lr_weights = tr_lr;
                auto res = train_decoder(ds, dcfg);
                nn::save_weights(tr_out, res.decoder.graph, res.decoder.weights);
                if (!tr_out_latents.empty()) {
                    save_latents(tr_out_latents, res.latents);
                    outputs.push_back(tr_out_latents);
                }
                write_loss_csv(tr_csv, res.train_loss, res.val_loss);
            } else if (train_which == "layering") {
                if (tr_triples.empty())
                    throw FormatError("train layering requires --triples");
                TripleSet main_set = load_triples(tr_triples);
                TripleSet ft;
                bool has_ft = !tr_finetune.empty();
                if (has_ft)
                    ft = load_triples(tr_finetune);
                lcfg.seed = tr_seed;
                lcfg.log = &std::cerr;
                if (tr_epochs > 0)
                    lcfg.epochs = tr_epochs;
                if (tr_batch > 0)
                    lcfg.batch_size = tr_batch;
                if (tr_lr > 0)
                    lcfg.lr = tr_lr;
                auto res = train_layering(main_set, has_ft ? &ft : nullptr, lcfg);
                nn::save_weights(tr_out, res.net.graph, res.net.weights);
                write_loss_csv(tr_csv, res.train_loss, res.val_loss);
            } else {
                if (tr_latents.empty() || tr_decoder.empty())
                    throw FormatError("train sampler requires --latents and --decoder-weights");
                Decoder dec = load_decoder(tr_decoder);
                auto latents = load_latents(tr_latents);
                std::vector<SamplerTrainItem> items;
                for (const auto &l : latents)
                    for (int c = 0; c < l.channels; ++c) {
                        SamplerTrainItem item;
                        item.latent.assign(l.channel(c), l.channel(c) + kLatentDim);
                        item.gndf = compute_gndf(dec, l.channel(c), gndf_res, gndf_wi, gndf_wi);
                        items.push_back(std::move(item));
                    }
                scfg.seed = tr_seed;
                scfg.log = &std::cerr;
                if (tr_epochs > 0)
                    scfg.epochs = tr_epochs;
                if (tr_lr > 0)
                    scfg.lr = tr_lr;
                auto res = train_sampler(items, scfg);
                nn::save_weights(tr_out, res.net.graph, res.net.weights);
                write_loss_csv(tr_csv, res.loss, {});
            }
            emit_manifest(tr_out, cmd_line, tr_seed, outputs);
        } else if (*project) {
            Decoder dec = load_decoder(pr_decoder);
            TargetSampler target;
            if (!pr_conductor.empty()) {
                auto v = parse_scalars(pr_conductor);
                ConductorParams p{v.at(0), v.at(1)};
                target = target_from_eval(
                    [p](const Direction &wi, const Direction &wo) { return eval_conductor(p, wi, wo); });
            } else if (!pr_dielectric.empty()) {
                auto v = parse_scalars(pr_dielectric);
                DielectricParams p{v.at(0), v.at(1)};
                target = target_from_eval([p](const Direction &wi, const Direction &wo) {
                    return eval_dielectric_reflect(p, wi, wo);
                });
            } else if (!pr_dataset.empty() && pr_record >= 0) {
                Dataset ds = load_dataset(pr_dataset);
                target = target_from_grid(ds.grid(),
                                          ds.records.at(pr_record).values);
            } else {
                throw FormatError("project needs --conductor, --dielectric, or "
                                  "--dataset with --record");
            }
            auto res = project_channel(dec, target, pcfg);
            LatentBrdf lb(1);
            std::copy(res.latent.begin(), res.latent.end(), lb.channel(0));
            save_latents(pr_out, {lb});
            emit_manifest(pr_out, cmd_line, pcfg.seed, {pr_out});
            std::cout << "projected in " << res.steps << " steps, best L1 "
                      << res.best_loss_curve.back() << "\n";
        } else if (*triples) {
            Dataset ds = load_dataset(mt_dataset);
            Decoder dec = load_decoder(mt_decoder);
            auto two_latents = load_latents(mt_latents);
            if (static_cast<int>(two_latents.size()) != ds.manifest.n_two_layer)
                throw FormatError("latent count does not match the dataset's two-layer records");
            auto cond = project_records(dec, ds, ds.conductor_begin(), ds.manifest.n_conductor,
                                        mtcfg);
            auto diel = project_records(dec, ds, ds.dielectric_begin(), ds.manifest.n_dielectric,
                                        mtcfg);
            TripleSet set;
            set.decoder_fingerprint = dec.graph.fingerprint();
            for (int k = 0; k < ds.manifest.n_two_layer; ++k) {
                const auto &rec = ds.records[ds.two_layer_begin() + k];
                LayerTriple t;
                int top_idx = static_cast<int>(rec.params[6]);
                int bottom_idx = static_cast<int>(rec.params[7]);
                std::copy_n(diel.at(top_idx).channel(0), kLatentDim, t.v_top);
                std::copy_n(cond.at(bottom_idx).channel(0), kLatentDim, t.v_bottom);
                t.a = static_cast<float>(rec.params[4]);
                t.sigma_t = static_cast<float>(rec.params[5]);
                std::copy_n(two_latents[k].channel(0), kLatentDim, t.v_gt);
                set.triples.push_back(t);
            }
            save_triples(mt_out, set);
            std::vector<std::string> outputs{mt_out};
            if (!mt_out_three.empty()) {
                auto three = project_records(dec, ds, ds.three_layer_begin(),
                                             ds.manifest.n_three_layer, mtcfg);
                TripleSet ft;
                ft.decoder_fingerprint = set.decoder_fingerprint;
                for (int k = 0; k < ds.manifest.n_three_layer; ++k) {
                    const auto &rec = ds.records[ds.three_layer_begin() + k];
                    LayerTriple t;
                    int top_idx = static_cast<int>(rec.params[10]);
                    int bottom_two = static_cast<int>(rec.params[11]);
                    std::copy_n(diel.at(top_idx).channel(0), kLatentDim, t.v_top);
                    std::copy_n(two_latents.at(bottom_two).channel(0), kLatentDim, t.v_bottom);
                    t.a = static_cast<float>(rec.params[2]);
                    t.sigma_t = static_cast<float>(rec.params[3]);
                    std::copy_n(three.at(k).channel(0), kLatentDim, t.v_gt);
                    ft.triples.push_back(t);
                }
                save_triples(mt_out_three, ft);
                outputs.push_back(mt_out_three);
            }
            emit_manifest(mt_out, cmd_line, mtcfg.seed, outputs);
        } else if (*layer_cmd) {
            LayeringNet net;
            net.graph = build_layering_net();
            net.weights = nn::load_weights(ly_net, net.graph);
            auto top = load_latents(ly_top);
            auto bottom = load_latents(ly_bottom);
            if (top.empty() || bottom.empty())
                throw FormatError("empty latent file");
            std::vector<double> albedo = parse_scalars(ly_albedo);
            if (static_cast<int>(albedo.size()) == 1)
                albedo.assign(top[0].channels, albedo[0]);
            LatentBrdf out = layer(net, top[0], bottom[0], albedo, ly_sigma_t);
            save_latents(ly_out, {out});
            emit_manifest(ly_out, cmd_line, 0, {ly_out});
        } else if (*fit) {
            SamplerNet net;
            net.graph = build_sampler_net();
            net.weights = nn::load_weights(fs_net, net.graph);
            auto latents = load_latents(fs_latents);
            json cache = json::object();
            for (size_t i = 0; i < latents.size(); ++i)
                for (int c = 0; c < latents[i].channels; ++c) {
                    ProxyParams p = fit_params(net, latents[i].channel(c));
                    uint64_t h = 1469598103934665603ULL;
                    const float *lc = latents[i].channel(c);
                    for (int k = 0; k < kLatentDim; ++k) {
                        uint32_t bits;
                        std::memcpy(&bits, &lc[k], 4);
                        h = (h ^ bits) * 1099511628211ULL;
                    }
                    char key[17];
                    std::snprintf(key, sizeof(key), "%016llx",
                                  static_cast<unsigned long long>(h));
                    cache[key] = {{"sigma", p.sigma}, {"w", p.w}};
                    std::cout << "latent " << i << " channel " << c << ": sigma=" << p.sigma
                              << " w=" << p.w << "\n";
                }
            if (!fs_out.empty()) {
                std::ofstream out(fs_out);
                out << cache.dump(2) << "\n";
                emit_manifest(fs_out, cmd_line, 0, {fs_out});
            }
        } else if (*render_cmd) {
            Scene scene = parse_scene(rd_scene);
            rcfg.strategy = rd_strategy == "light"  ? Strategy::LightOnly
                            : rd_strategy == "brdf" ? Strategy::BrdfOnly
                                                    : Strategy::MIS;
            RenderStats stats;
            ImageBuffer img = render(scene, rcfg, &stats);
            write_pfm(rd_out, img);
            std::vector<std::string> outputs{rd_out};
            if (!rd_png.empty()) {
                write_png(rd_png, img, rd_exposure);
                outputs.push_back(rd_png);
            }
            if (!rd_stats.empty()) {
                json s = {{"mean_pixel_variance", stats.mean_pixel_variance},
                          {"max_pdf_audit_error", stats.max_pdf_audit_error},
                          {"neural_queries", stats.neural_queries},
                          {"flushes", stats.flushes}};
                std::ofstream o(rd_stats);
                o << s.dump(2) << "\n";
            }
            emit_manifest(rd_out, cmd_line, rcfg.seed, outputs);
            std::cout << "mean pixel variance " << stats.mean_pixel_variance << "\n";
        } else if (*lobe) {
            Direction wi = spherical_to_dir(lb_theta * kPi / 180.0, 0.0);
            std::function<Vec3(const Direction &, const Direction &)> eval;
            Decoder dec;
            std::vector<LatentBrdf> latents;
            if (!lb_latents.empty()) {
                if (lb_decoder.empty())
                    throw FormatError("lobe with --latent requires --decoder-weights");
                dec = load_decoder(lb_decoder);
                latents = load_latents(lb_latents);
                if (latents.empty())
                    throw FormatError("empty latent file");
                eval = [&dec, &latents](const Direction &i, const Direction &o) {
                    auto v = eval_brdf(dec, latents[0], i, o);
                    return v.size() == 1 ? Vec3{v[0], v[0], v[0]} : Vec3{v[0], v[1], v[2]};
                };
            } else if (!lb_conductor.empty()) {
                auto v = parse_scalars(lb_conductor);
                ConductorParams p{v.at(0), v.at(1)};
                eval = [p](const Direction &i, const Direction &o) {
                    double f = eval_conductor(p, i, o);
                    return Vec3{f, f, f};
                };
            } else if (!lb_dielectric.empty()) {
                auto v = parse_scalars(lb_dielectric);
                DielectricParams p{v.at(0), v.at(1)};
                eval = [p](const Direction &i, const Direction &o) {
                    double f = eval_dielectric_reflect(p, i, o);
                    return Vec3{f, f, f};
                };
            } else {
                throw FormatError("lobe needs --latent, --conductor, or --dielectric");
            }
            ImageBuffer img = render_lobe(eval, wi, lb_res);
            write_pfm(lb_out, img);
            std::vector<std::string> outputs{lb_out};
            if (!lb_png.empty()) {
                write_png(lb_png, img, lb_exposure);
                outputs.push_back(lb_png);
            }
            emit_manifest(lb_out, cmd_line, 0, outputs);
        } else if (*compare) {
            ImageBuffer a = read_pfm(cp_a);
            ImageBuffer b = read_pfm(cp_b);
            ImageMetrics m = image_metrics(a, b);
            std::cout << "mse " << m.mse << "\nrel_l1 " << m.rel_l1 << "\n";
        }
    } catch (const DivergedLoss &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const TruncatedFile &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
