#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "grasp/trainkit.hpp"

namespace grasp::trainkit {

// On-disk container shared by checkpoints and persisted gradient streams:
// a UTF-8 manifest (format version, fingerprint, stage, shapes, byte
// offsets) followed by a binary payload of little-endian IEEE-754 doubles,
// row-major per matrix, in manifest order. Writing the result of a read
// reproduces the original file byte for byte.

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path,
                     bool force = false);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// A persisted per-example gradient stream (one g matrix per sample plus the
// sampled coefficients), with the planted ground truth when available.
struct GradientStream {
    struct Truth {
        linalg::UnitVector u_s;
        linalg::UnitVector v_s;
        double alpha_mean = 0.0;
        double alpha_jitter = 0.0;
        double mu_frob = 0.0;
        double tau = 0.0;
        int r_t = 0;
    };

    std::uint64_t seed = 0;
    std::int64_t n = 0;
    int d_out = 0;
    int d_in = 0;
    std::vector<linalg::Matrix> gradients;
    std::vector<double> alphas;
    std::optional<Truth> truth;
    std::string config_fingerprint;

    linalg::Matrix accumulated() const;  // plain sum of the gradients
};

void save_stream(const GradientStream& stream, const std::filesystem::path& path,
                 bool force = false);
GradientStream load_stream(const std::filesystem::path& path);

// Peeks at a container's manifest: "checkpoint" or "gradient-stream".
std::string container_kind(const std::filesystem::path& path);

}  // namespace grasp::trainkit
