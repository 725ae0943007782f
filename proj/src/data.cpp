#include "octad/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "octad/imageio.hpp"

namespace fs = std::filesystem;

namespace octad::data {

const char* label_name(Label l) {
    switch (l) {
        case Label::normal: return "normal";
        case Label::abnormal: return "abnormal";
        default: return "unknown";
    }
}

std::optional<Label> parse_label(const std::string& s) {
    if (s == "normal") return Label::normal;
    if (s == "abnormal") return Label::abnormal;
    if (s == "unknown") return Label::unknown;
    return std::nullopt;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

void DatasetIndex::rebuild_patient_groups() {
    by_patient.clear();
    for (size_t i = 0; i < entries.size(); ++i)
        by_patient[entries[i].patient_id].push_back(i);
}

std::optional<ParsedName> parse_filename(const std::string& filename) {
    std::string stem = fs::path(filename).stem().string();
    size_t first = stem.find('-');
    size_t last = stem.rfind('-');
    if (first == std::string::npos || first == last) return std::nullopt;
    std::string label_tok = stem.substr(0, first);
    std::string pid = stem.substr(first + 1, last - first - 1);
    std::string idx = stem.substr(last + 1);
    if (label_tok.empty() || pid.empty() || idx.empty()) return std::nullopt;
    if (!std::all_of(idx.begin(), idx.end(), [](char c) { return std::isdigit(c); }))
        return std::nullopt;

    std::string upper = label_tok;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    ParsedName out;
    out.patient_id = pid;
    out.label = upper == "NORMAL" ? Label::normal : Label::abnormal;
    return out;
}

namespace {

bool is_raster(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".png" || ext == ".bmp" || ext == ".tif" || ext == ".tiff" ||
           ext == ".jpg" || ext == ".jpeg";
}

struct ManifestRecord {
    std::string path;
    std::string patient_id;
    Label label;
};

std::vector<ManifestRecord> read_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    require(bool(in), "cannot open manifest: " + manifest_path.string());
    std::vector<ManifestRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string path, pid, label;
        if (!std::getline(is, path, '\t') || !std::getline(is, pid, '\t') ||
            !std::getline(is, label))
            throw Error("manifest line " + std::to_string(lineno) +
                        ": expected path<TAB>patient_id<TAB>label");
        auto l = parse_label(label);
        require(bool(l), "manifest line " + std::to_string(lineno) + ": bad label '" +
                             label + "'");
        out.push_back({path, pid, *l});
    }
    return out;
}

}  // namespace

DatasetIndex load_dataset(const std::string& root, Split split, int target_resolution) {
    fs::path dir = fs::path(root) / split_name(split);
    if (!fs::exists(dir)) dir = root;
    require(fs::exists(dir), "dataset directory does not exist: " + dir.string());
    require(fs::is_directory(dir), "not a directory: " + dir.string());

    DatasetIndex index;
    index.split = split;

    fs::path manifest = dir / "manifest.tsv";
    if (fs::exists(manifest)) {
        auto records = read_manifest(manifest);
        std::sort(records.begin(), records.end(),
                  [](const auto& a, const auto& b) { return a.path < b.path; });
        for (const auto& rec : records) {
            fs::path p = fs::path(rec.path).is_absolute() ? fs::path(rec.path)
                                                          : dir / rec.path;
            BScanImage scan;
            scan.pixels = io::load_grayscale(p.string(), target_resolution);
            scan.patient_id = rec.patient_id;
            scan.label = rec.label;
            scan.source_path = p.string();
            index.entries.push_back(std::move(scan));
        }
        index.rebuild_patient_groups();
        return index;
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && is_raster(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& p : files) {
        auto parsed = parse_filename(p.filename().string());
        if (!parsed) {
            std::cerr << "warning: skipping unparseable filename " << p << "\n";
            index.skipped.push_back(p.string());
            continue;
        }
        BScanImage scan;
        scan.pixels = io::load_grayscale(p.string(), target_resolution);
        scan.patient_id = parsed->patient_id;
        scan.label = parsed->label;
        scan.source_path = p.string();
        index.entries.push_back(std::move(scan));
    }
    index.rebuild_patient_groups();
    return index;
}

// ---------------------------------------------------------------------------
// Phantoms

Phantom generate_phantom(const PhantomConfig& cfg, uint64_t index, uint64_t seed) {
    cfg.validate();
    Rng rng = derive_rng(seed, "phantom", index);
    const int n = cfg.resolution;

    Phantom out;
    out.scan.pixels = Image(n, n, 0.f);
    out.band = roi::RoiMask(n, n);

    const double band_top = cfg.band_top_frac * n;
    const double band_bottom = cfg.band_bottom_frac * n;
    const double spacing =
        cfg.n_layers > 1 ? (band_bottom - band_top) / double(cfg.n_layers - 1) : 0.0;

    // shared smooth curvature for all layers
    const double curve_phase = rng.uniform(0, 2 * M_PI);
    const double curve_wavelength = rng.uniform(1.2, 2.0) * n;
    const double curve_amp = cfg.curvature_amplitude * rng.uniform(0.6, 1.0);

    struct Layer {
        double row0, half_thickness, brightness;
    };
    std::vector<Layer> layers(cfg.n_layers);
    for (int k = 0; k < cfg.n_layers; ++k) {
        layers[k].row0 = band_top + k * spacing + rng.uniform(-0.3, 0.3);
        layers[k].half_thickness = rng.uniform(cfg.thickness_lo, cfg.thickness_hi);
        layers[k].brightness = rng.uniform(0.55, 0.95);
    }

    Image& im = out.scan.pixels;
    const double background = 0.04;
    for (int c = 0; c < n; ++c) {
        double curve = curve_amp * std::sin(2 * M_PI * c / curve_wavelength + curve_phase);
        for (const auto& layer : layers) {
            double center = layer.row0 + curve;
            int r0 = std::max(0, int(center - 4 * layer.half_thickness));
            int r1 = std::min(n - 1, int(center + 4 * layer.half_thickness) + 1);
            for (int r = r0; r <= r1; ++r) {
                double d = (r - center) / layer.half_thickness;
                double v = layer.brightness * std::exp(-0.5 * d * d);
                im.at(r, c) = float(std::max(double(im.at(r, c)), v));
            }
        }
        // band ground truth: envelope from the first to the last layer
        double top = layers.front().row0 + curve - layers.front().half_thickness - 1;
        double bottom = layers.back().row0 + curve + layers.back().half_thickness + 1;
        for (int r = std::max(0, int(std::floor(top)));
             r <= std::min(n - 1, int(std::ceil(bottom))); ++r)
            out.band.at(r, c) = 1;
    }
    out.band.update_coverage();

    // multiplicative speckle: Gaussian in log intensity
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double base = std::max(background, double(im.at(r, c)));
            double v = base * std::exp(cfg.speckle_sigma * rng.normal());
            im.at(r, c) = float(std::clamp(v, 0.0, 1.0));
        }

    std::ostringstream pid;
    pid << "synth" << std::setw(4) << std::setfill('0') << index;
    out.scan.patient_id = pid.str();
    out.scan.label = Label::normal;
    return out;
}

DatasetIndex generate_synthetic_dataset(const PhantomConfig& cfg, int n, uint64_t seed) {
    require(n >= 1, "generate_synthetic_dataset: n must be positive");
    DatasetIndex index;
    index.split = Split::train;
    index.entries.reserve(n);
    for (int i = 0; i < n; ++i)
        index.entries.push_back(generate_phantom(cfg, uint64_t(i), seed).scan);
    index.rebuild_patient_groups();
    return index;
}

AbnormalPhantom generate_abnormal_phantom(const PhantomConfig& cfg,
                                          const perturb::PerturbConfig& pcfg,
                                          uint64_t index, uint64_t seed,
                                          double lesion_threshold) {
    Phantom base = generate_phantom(cfg, index, seed);
    Rng rng = derive_rng(seed, "phantom-lesion", index);

    AbnormalPhantom out;
    out.scan = base.scan;
    out.scan.label = Label::abnormal;
    out.scan.pixels = perturb::perturb(base.scan.pixels, base.band, pcfg, rng);
    out.lesion_mask.assign(out.scan.pixels.size(), 0);
    for (size_t i = 0; i < out.lesion_mask.size(); ++i)
        out.lesion_mask[i] =
            std::abs(double(out.scan.pixels.pix[i]) - double(base.scan.pixels.pix[i])) >
                    lesion_threshold
                ? 1
                : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Sampling / triplets

const BScanImage& sample_positive(const BScanImage& anchor, const DatasetIndex& index,
                                  PositiveMode mode, Rng& rng) {
    std::vector<size_t> eligible;
    for (size_t i = 0; i < index.entries.size(); ++i) {
        const auto& e = index.entries[i];
        if (mode == PositiveMode::inter_patient) {
            if (e.patient_id != anchor.patient_id) eligible.push_back(i);
        } else {
            if (e.patient_id == anchor.patient_id && &e != &anchor &&
                !bit_identical(e.pixels, anchor.pixels))
                eligible.push_back(i);
        }
    }
    if (eligible.empty()) {
        std::string m = mode == PositiveMode::inter_patient ? "inter_patient" : "intra_patient";
        throw Error("sample_positive(" + m + "): no eligible entry for patient '" +
                    anchor.patient_id +
                    "'; add more patients/scans or switch positive mode");
    }
    return index.entries[eligible[rng.uniform_int(int(eligible.size()))]];
}

TripletSample assemble_triplet(const BScanImage& anchor, const DatasetIndex& index,
                               const TripletConfig& cfg, Rng& rng) {
    require(anchor.label == Label::normal, "assemble_triplet: anchor must be normal");
    auto extraction = roi::extract_roi(anchor.pixels, cfg.roi);
    if (!extraction.ok)
        throw Error("assemble_triplet: roi extraction failed (" + extraction.reason + ")");

    TripletSample t;
    t.anchor = anchor;
    t.roi = std::move(extraction.mask);
    t.positive = sample_positive(anchor, index, cfg.positive_mode, rng);
    t.negative = anchor;
    t.negative.pixels = perturb::perturb(anchor.pixels, t.roi, cfg.perturb, rng);
    t.negative.label = Label::abnormal;
    return t;
}

std::optional<TripletSample> try_assemble_triplet(const BScanImage& anchor,
                                                  const DatasetIndex& index,
                                                  const TripletConfig& cfg, Rng& rng,
                                                  std::string* why) {
    try {
        return assemble_triplet(anchor, index, cfg, rng);
    } catch (const Error& e) {
        if (why) *why = e.what();
        return std::nullopt;
    }
}

void save_dataset(const DatasetIndex& index, const std::string& out_root) {
    fs::path split_dir = fs::path(out_root) / split_name(index.split);
    fs::create_directories(split_dir);
    std::map<std::string, int> per_patient_counter;
    for (const auto& e : index.entries) {
        int k = per_patient_counter[e.patient_id]++;
        std::ostringstream name;
        name << (e.label == Label::normal ? "NORMAL" : "ABNORMAL") << "-" << e.patient_id
             << "-" << std::setw(3) << std::setfill('0') << k << ".png";
        io::save_grayscale_png(e.pixels, (split_dir / name.str()).string());
    }
}

}  // namespace octad::data
