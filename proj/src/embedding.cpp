#include "vsmactr/embedding.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <json.hpp>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "vsmactr/error.hpp"
#include "vsmactr/rng.hpp"

namespace vsmactr {

namespace {

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<std::string_view> tokens(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void unavailable(const std::string& what)
{
    throw Error(Errc::provider_unavailable, what);
}

} // namespace

std::string_view embed_kind_name(EmbedKind k) noexcept
{
    return k == EmbedKind::sentence ? "sentence" : "prompt_hidden";
}

TestEmbedder::TestEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed)
{
    if (dim < 1) throw Error(Errc::invalid_argument, "embedding dim must be >= 1");
}

Provenance TestEmbedder::provenance() const { return {"test", "hash-projection-" + std::to_string(dim_)}; }

const Vector& TestEmbedder::token_direction(std::uint64_t hash) const
{
    auto it = directions_.find(hash);
    if (it != directions_.end()) return it->second;
    Rng rng(derive_seed(seed_, hash));
    Vector v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = uniform(rng, -1.0, 1.0);
    return directions_.emplace(hash, std::move(v)).first->second;
}

Vector TestEmbedder::embed_one(std::string_view text) const
{
    Vector v = Vector::Zero(dim_);
    auto toks = tokens(text);
    if (toks.empty()) toks.push_back({});
    for (auto t : toks) v += token_direction(fnv1a(t));
    const double n = v.norm();
    // opposite directions can cancel exactly only for adversarial input
    if (n == 0.0) return token_direction(fnv1a(text)).normalized();
    return v / n;
}

Matrix TestEmbedder::embed(std::span<const std::string> texts, EmbedKind)
{
    Matrix m(static_cast<Eigen::Index>(texts.size()), dim_);
    for (std::size_t i = 0; i < texts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = embed_one(texts[i]).transpose();
    return m;
}

BridgeProvider::BridgeProvider(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout)
{
    if (command_.empty()) throw Error(Errc::invalid_argument, "empty bridge command");
}

BridgeProvider::~BridgeProvider() { stop(); }

Provenance BridgeProvider::provenance() const { return {"bridge", model_.empty() ? command_ : model_}; }

void BridgeProvider::start()
{
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) unavailable(std::string("pipe: ") + std::strerror(errno));
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        unavailable(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) unavailable(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    inbuf_.clear();
}

void BridgeProvider::stop() noexcept
{
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        // closing stdin asks the bridge to exit; do not wait forever
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) != 0) {
                pid_ = -1;
                return;
            }
            usleep(10000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void BridgeProvider::write_line(const std::string& line)
{
    std::string buf = line + "\n";
    std::size_t off = 0;
    while (off < buf.size()) {
        const ssize_t n = write(to_child_, buf.data() + off, buf.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            unavailable("bridge '" + command_ + "' closed its input: " + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string BridgeProvider::read_line()
{
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        const auto nl = inbuf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = inbuf_.substr(0, nl);
            inbuf_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) unavailable("bridge '" + command_ + "' timed out");
        pollfd p{from_child_, POLLIN, 0};
        const int r = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) continue;
        char buf[65536];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) unavailable("bridge '" + command_ + "' exited without answering");
        inbuf_.append(buf, static_cast<std::size_t>(n));
    }
}

Matrix BridgeProvider::embed(std::span<const std::string> texts, EmbedKind kind)
{
    if (pid_ < 0) start();
    const std::uint64_t id = next_id_++;
    nlohmann::ordered_json req;
    req["id"] = id;
    req["kind"] = embed_kind_name(kind);
    req["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    write_line(req.dump());

    nlohmann::json resp;
    const std::string line = read_line();
    try {
        resp = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        unavailable("bridge sent a non-JSON line: " + line.substr(0, 200));
    }
    if (!resp.is_object() || !resp.contains("id") || resp["id"] != id) {
        unavailable("bridge response id does not match request " + std::to_string(id));
    }
    if (resp.contains("error")) {
        unavailable("bridge error: " + resp["error"].dump());
    }
    if (resp.contains("model") && resp["model"].is_string()) model_ = resp["model"].get<std::string>();
    try {
        const auto dim = resp.at("dim").get<Eigen::Index>();
        const auto& vecs = resp.at("vectors");
        if (dim < 1 || !vecs.is_array() || vecs.size() != texts.size()) {
            throw Error(Errc::dimension_mismatch, "bridge returned " + std::to_string(vecs.size()) + " vectors for " +
                                                      std::to_string(texts.size()) + " texts");
        }
        const int k = static_cast<int>(kind);
        auto known = session_dims_.find(k);
        if (known != session_dims_.end() && known->second != dim) {
            throw Error(Errc::dimension_mismatch, "bridge changed dim from " + std::to_string(known->second) + " to " +
                                                      std::to_string(dim));
        }
        session_dims_[k] = dim;
        Matrix m(static_cast<Eigen::Index>(texts.size()), dim);
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            const auto& v = vecs[i];
            if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != dim) {
                throw Error(Errc::dimension_mismatch, "vector " + std::to_string(i) + " does not have dim " +
                                                          std::to_string(dim));
            }
            for (Eigen::Index j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)].get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::dimension_mismatch, std::string("malformed bridge response: ") + e.what());
    }
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec)
{
    if (spec == "test") return std::make_unique<TestEmbedder>();
    if (spec.starts_with("test:")) {
        const std::string d(spec.substr(5));
        char* end = nullptr;
        const long dim = std::strtol(d.c_str(), &end, 10);
        if (d.empty() || *end != '\0' || dim < 1 || dim > 1 << 16) {
            throw Error(Errc::invalid_argument, "bad test embedder dim '" + d + "'");
        }
        return std::make_unique<TestEmbedder>(static_cast<int>(dim));
    }
    if (spec == "bridge" || spec.starts_with("bridge:")) {
        std::string cmd = spec.size() > 7 ? std::string(spec.substr(7)) : std::string();
        if (const char* env = std::getenv(kBridgeEnv); env && *env) cmd = env;
        if (cmd.empty()) unavailable(std::string("no bridge command given and ") + kBridgeEnv + " is unset");
        return std::make_unique<BridgeProvider>(cmd);
    }
    throw Error(Errc::invalid_argument, "unknown provider '" + std::string(spec) + "' (test, test:<dim>, bridge:<cmd>)");
}

EmbeddingMatrix embed_lines(EmbeddingProvider& provider, std::span<const std::string> lines, EmbedKind kind)
{
    if (lines.empty()) throw Error(Errc::invalid_argument, "no lines to embed");
    EmbeddingMatrix out;
    out.values = provider.embed(lines, kind);
    out.provenance = provider.provenance();
    if (out.values.rows() != static_cast<Eigen::Index>(lines.size()) || out.values.cols() < 1) {
        throw Error(Errc::dimension_mismatch, "provider returned " + std::to_string(out.values.rows()) + " rows for " +
                                                  std::to_string(lines.size()) + " lines");
    }
    if (!out.values.allFinite()) throw Error(Errc::dimension_mismatch, "provider returned non-finite values");
    return out;
}

} // namespace vsmactr
