#include "lmd/diffusion/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lmd::diffusion {

namespace {

constexpr const char* kMagic = "lmd-checkpoint";
constexpr int kVersion = 1;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("checkpoint: bad value for " + key + ": '" + text + "'");
    }
    return v;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("checkpoint: bad value for " + key + ": '" + text + "'");
    }
}

}  // namespace

std::string checkpoint_header(const EpsilonModel& model, const NoiseSchedule& schedule) {
    return std::string(kMagic) + " " + std::to_string(kVersion) + " " + describe(model.architecture()) +
           " steps=" + std::to_string(schedule.steps()) + " beta_start=" + format_double(schedule.beta_start()) +
           " beta_end=" + format_double(schedule.beta_end()) + " seed=" + std::to_string(model.seed());
}

void save_checkpoint(const std::filesystem::path& path, const EpsilonModel& model, const NoiseSchedule& schedule) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
    out << checkpoint_header(model, schedule) << '\n';
    for (const auto& p : model.parameters()) {
        for (float v : p.value.data()) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                   static_cast<char>((bits >> 16) & 0xff), static_cast<char>(bits >> 24)};
            out.write(bytes, 4);
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("checkpoint: missing header in " + path.string());

    std::istringstream fields(header);
    std::string magic;
    int version = 0;
    fields >> magic >> version;
    if (magic != kMagic) throw std::runtime_error("checkpoint: " + path.string() + " is not a checkpoint file");
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    std::map<std::string, std::string> kv;
    std::string token;
    while (fields >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed header field '" + token + "'");
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("checkpoint: header lacks '" + key + "'");
        return it->second;
    };

    Architecture arch;
    arch.channels = parse_size("channels", get("channels"));
    arch.height = parse_size("height", get("height"));
    arch.width = parse_size("width", get("width"));
    arch.time_dim = parse_size("time_dim", get("time_dim"));
    {
        std::istringstream widths(get("widths"));
        std::string item;
        std::size_t i = 0;
        while (std::getline(widths, item, ',')) {
            if (i >= arch.widths.size()) throw std::runtime_error("checkpoint: too many block widths");
            arch.widths[i++] = parse_size("widths", item);
        }
        if (i != arch.widths.size()) throw std::runtime_error("checkpoint: expected 4 block widths");
    }
    const std::size_t steps = parse_size("steps", get("steps"));
    const double beta_start = parse_double("beta_start", get("beta_start"));
    const double beta_end = parse_double("beta_end", get("beta_end"));
    const std::size_t seed = parse_size("seed", get("seed"));

    Checkpoint ckpt{EpsilonModel(arch, seed), steps, beta_start, beta_end};
    (void)ckpt.schedule();
    for (auto& p : ckpt.model.parameters()) {
        for (float& v : p.value.data()) {
            unsigned char bytes[4];
            if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
                throw std::runtime_error("checkpoint: truncated parameter data at '" + p.name + "'");
            }
            const std::uint32_t bits = std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) |
                                       (std::uint32_t{bytes[2]} << 16) | (std::uint32_t{bytes[3]} << 24);
            v = std::bit_cast<float>(bits);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("checkpoint: trailing bytes after parameters in " + path.string());
    }
    return ckpt;
}

}  // namespace lmd::diffusion
