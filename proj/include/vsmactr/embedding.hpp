#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <unordered_map>
#include <vector>

namespace vsmactr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Provenance {
    std::string provider;
    std::string model;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One row per embedded text.
struct EmbeddingMatrix {
    Matrix values;
    Provenance provenance;

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index dim() const noexcept { return values.cols(); }
};

/// "sentence": per-line trace embeddings. "prompt_hidden": final-layer prompt vectors.
enum class EmbedKind { sentence, prompt_hidden };

std::string_view embed_kind_name(EmbedKind k) noexcept;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual Provenance provenance() const = 0;
    /// texts.size() rows. Throws Error{provider_unavailable} / Error{dimension_mismatch}.
    virtual Matrix embed(std::span<const std::string> texts, EmbedKind kind) = 0;
};

/// Hashed bag of tokens through a fixed pseudo-random projection, normalized
/// to unit length. Needs no model and is stable across platforms.
class TestEmbedder final : public EmbeddingProvider {
public:
    explicit TestEmbedder(int dim = 64, std::uint64_t seed = 0x7e57e3bedULL);

    Provenance provenance() const override;
    Matrix embed(std::span<const std::string> texts, EmbedKind kind) override;

    Vector embed_one(std::string_view text) const;
    int dim() const noexcept { return dim_; }

private:
    const Vector& token_direction(std::uint64_t hash) const;

    int dim_;
    std::uint64_t seed_;
    mutable std::unordered_map<std::uint64_t, Vector> directions_;
};

/// Client for an external embedding process speaking line-delimited JSON on
/// its stdin/stdout:
///   -> {"id": 1, "kind": "sentence", "texts": ["...", ...]}
///   <- {"id": 1, "dim": 384, "vectors": [[...], ...]}   or   {"id": 1, "error": "..."}
/// The process is started with `sh -c <command>` on first use.
class BridgeProvider final : public EmbeddingProvider {
public:
    explicit BridgeProvider(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(300));
    ~BridgeProvider() override;

    BridgeProvider(const BridgeProvider&) = delete;
    BridgeProvider& operator=(const BridgeProvider&) = delete;

    Provenance provenance() const override;
    Matrix embed(std::span<const std::string> texts, EmbedKind kind) override;

    const std::string& command() const noexcept { return command_; }

private:
    void start();
    void stop() noexcept;
    void write_line(const std::string& line);
    std::string read_line();

    std::string command_;
    std::chrono::milliseconds timeout_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string inbuf_;
    std::uint64_t next_id_ = 1;
    std::unordered_map<int, Eigen::Index> session_dims_;
    std::string model_;
};

inline constexpr const char* kBridgeEnv = "VSMACTR_BRIDGE";

/// "test", "test:<dim>", "bridge" (command from $VSMACTR_BRIDGE) or
/// "bridge:<command>" ($VSMACTR_BRIDGE, when set, wins).
/// Throws Error{invalid_argument} / Error{provider_unavailable}.
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec);

/// Throws Error{invalid_argument} on empty input, Error{dimension_mismatch}
/// when the provider returns the wrong shape or non-finite values.
EmbeddingMatrix embed_lines(EmbeddingProvider& provider, std::span<const std::string> lines,
                            EmbedKind kind = EmbedKind::sentence);

} // namespace vsmactr
