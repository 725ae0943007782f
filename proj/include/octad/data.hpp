#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "octad/common.hpp"
#include "octad/perturb.hpp"
#include "octad/roi.hpp"

namespace octad::data {

enum class Label { normal, abnormal, unknown };

const char* label_name(Label l);
std::optional<Label> parse_label(const std::string& s);

struct BScanImage {
    Image pixels;  // [0,1] grayscale
    std::string patient_id;
    Label label = Label::unknown;
    std::string source_path;

    void validate() const {
        require(pixels.h >= 32 && pixels.w >= 32, "BScanImage: minimum size is 32x32");
        for (float v : pixels.pix)
            require(v >= 0.f && v <= 1.f, "BScanImage: pixel outside [0,1]");
    }
};

enum class Split { train, val, test };
const char* split_name(Split s);

struct DatasetIndex {
    std::vector<BScanImage> entries;
    Split split = Split::train;
    std::map<std::string, std::vector<size_t>> by_patient;
    std::vector<std::string> skipped;  // unparseable files, for the skip report

    size_t size() const { return entries.size(); }
    void rebuild_patient_groups();

    // anomaly-detection training data must be normal-only
    void validate_training() const {
        for (const auto& e : entries)
            require(e.label == Label::normal,
                    "training index contains a non-normal entry: " + e.source_path);
    }
};

// Filename contract `<LABEL>-<patientid>-<index>.<ext>`: LABEL has no dash,
// the trailing segment is the scan index, everything between is the patient
// id. NORMAL maps to normal, any other label token to abnormal.
struct ParsedName {
    std::string patient_id;
    Label label;
};
std::optional<ParsedName> parse_filename(const std::string& filename);

// Loads `root/<split>/` (or `root` itself when the split directory does not
// exist). A manifest.tsv (`path<TAB>patient_id<TAB>label`) overrides the
// filename grammar. Entries are ordered lexicographically by path.
DatasetIndex load_dataset(const std::string& root, Split split, int target_resolution);

// ---------------------------------------------------------------------------
// Synthetic layered-retina phantoms

struct PhantomConfig {
    int resolution = 64;
    int n_layers = 5;
    double thickness_lo = 1.5, thickness_hi = 2.5;  // per-layer half-thickness, px
    double curvature_amplitude = 1.2;               // px
    double speckle_sigma = 0.06;                    // log-intensity noise
    double band_top_frac = 0.30, band_bottom_frac = 0.70;

    void validate() const {
        require(resolution >= 32, "PhantomConfig: resolution must be >= 32");
        require(n_layers >= 1, "PhantomConfig: need at least one layer");
        require(thickness_lo > 0 && thickness_lo <= thickness_hi,
                "PhantomConfig: bad thickness range");
    }

    static PhantomConfig for_resolution(int res) {
        PhantomConfig cfg;
        double s = double(res) / 64.0;
        cfg.resolution = res;
        cfg.thickness_lo *= s;
        cfg.thickness_hi *= s;
        cfg.curvature_amplitude *= s;
        return cfg;
    }
};

struct Phantom {
    BScanImage scan;
    roi::RoiMask band;  // generator's own ground-truth retinal band
};

// Pure function of (cfg, index, seed): identical arguments give bit-identical
// pixels.
Phantom generate_phantom(const PhantomConfig& cfg, uint64_t index, uint64_t seed);

DatasetIndex generate_synthetic_dataset(const PhantomConfig& cfg, int n, uint64_t seed);

// A perturbed phantom plus the lesion ground truth (pixels whose intensity
// actually changed by more than lesion_threshold).
struct AbnormalPhantom {
    BScanImage scan;
    std::vector<uint8_t> lesion_mask;
};
AbnormalPhantom generate_abnormal_phantom(const PhantomConfig& cfg,
                                          const perturb::PerturbConfig& pcfg,
                                          uint64_t index, uint64_t seed,
                                          double lesion_threshold = 0.05);

// ---------------------------------------------------------------------------
// Triplet assembly

enum class PositiveMode { inter_patient, intra_patient };

const BScanImage& sample_positive(const BScanImage& anchor, const DatasetIndex& index,
                                  PositiveMode mode, Rng& rng);

enum class Role { anchor, positive, negative };

struct TripletSample {
    BScanImage anchor;
    BScanImage positive;
    BScanImage negative;
    roi::RoiMask roi;  // extracted on the anchor

    // anchor -> anchor, positive -> positive, negative -> anchor
    Role target_role(Role input) const {
        return input == Role::positive ? Role::positive : Role::anchor;
    }
    const Image& input_of(Role r) const {
        switch (r) {
            case Role::anchor: return anchor.pixels;
            case Role::positive: return positive.pixels;
            default: return negative.pixels;
        }
    }
    const Image& target_of(Role input) const {
        return target_role(input) == Role::positive ? positive.pixels : anchor.pixels;
    }
};

struct TripletConfig {
    PositiveMode positive_mode = PositiveMode::inter_patient;
    roi::RoiConfig roi;
    perturb::PerturbConfig perturb;
};

// Throws roi::RoiMask-related Error when extraction fails so callers can
// skip the sample; use try_assemble_triplet for the non-throwing variant.
TripletSample assemble_triplet(const BScanImage& anchor, const DatasetIndex& index,
                               const TripletConfig& cfg, Rng& rng);
std::optional<TripletSample> try_assemble_triplet(const BScanImage& anchor,
                                                  const DatasetIndex& index,
                                                  const TripletConfig& cfg, Rng& rng,
                                                  std::string* why = nullptr);

// Writes `<out>/<split>/NORMAL-<pid>-000.png` files plus a generation config
// snapshot; abnormal entries also write `<out>/masks/<name>.png` lesion masks.
void save_dataset(const DatasetIndex& index, const std::string& out_root);

}  // namespace octad::data
