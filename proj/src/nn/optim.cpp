#include "windcast/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "windcast/common/error.hpp"
#include "windcast/common/io.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::nn {

void adam_step(Parameter& p, const AdamOptions& o) {
    p.step += 1;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(p.step));
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = p.adam_m.data();
    double* v = p.adam_v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
        v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
}

void adam_step(ParameterStore& store, const AdamOptions& options) {
    for (auto& p : store.all()) adam_step(p, options);
}

// ------------------------------------------------------------- checkpoints

namespace {

void put_le64(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_le64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& store, const CheckpointInfo& info) {
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["format"] = "windcast-params-v1";
    manifest["dtype"] = "float64-le";
    manifest["seed"] = info.seed;
    manifest["step"] = info.step;
    Json entries = Json::array();
    std::string blob;
    blob.reserve(store.scalar_count() * 8);
    for (const auto& p : store.all()) {
        Json e;
        e["name"] = p.name;
        e["shape"] = p.value.shape();
        e["offset"] = blob.size();
        e["count"] = p.value.size();
        entries.push_back(std::move(e));
        for (double v : p.value.values()) put_le64(blob, v);
    }
    manifest["parameters"] = std::move(entries);
    manifest["total_bytes"] = blob.size();
    write_text_file(dir / "weights.bin", blob);
    write_json_file(dir / "manifest.json", manifest);
}

CheckpointInfo load_checkpoint(const std::filesystem::path& dir, ParameterStore& store) {
    const Json manifest = read_json_file(dir / "manifest.json");
    const std::string blob = read_text_file(dir / "weights.bin");
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    for (const auto& e : manifest.at("parameters")) {
        const auto name = e.at("name").get<std::string>();
        Parameter* p = store.find(name);
        if (p == nullptr) throw Error(ErrorKind::ShapeMismatch, "checkpoint parameter '" + name + "' not in model");
        const auto shape = e.at("shape").get<Shape>();
        if (shape != p->value.shape()) {
            throw Error(ErrorKind::ShapeMismatch, "checkpoint shape " + to_string(shape) + " for '" + name +
                                                      "' but model has " + to_string(p->value.shape()));
        }
        const auto offset = e.at("offset").get<std::size_t>();
        const auto count = e.at("count").get<std::size_t>();
        if (offset + count * 8 > blob.size()) {
            throw Error(ErrorKind::ParseError, "weights.bin truncated at parameter '" + name + "'");
        }
        for (std::size_t i = 0; i < count; ++i) p->value[i] = get_le64(bytes + offset + 8 * i);
    }
    CheckpointInfo info;
    info.seed = manifest.value("seed", std::uint64_t{0});
    info.step = manifest.value("step", std::int64_t{0});
    return info;
}

// ------------------------------------------------------- training driver

double evaluate_loss(std::size_t count, std::size_t batch_size, const BatchLoss& batch_loss) {
    if (count == 0) throw Error(ErrorKind::EmptyDataset, "no windows to evaluate");
    Rng unused(0);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    double total = 0.0;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t n = std::min(batch_size, count - start);
        Tape tape;
        Var loss = batch_loss(tape, std::span<const std::size_t>(idx.data() + start, n), false, unused);
        total += loss.value().item() * static_cast<double>(n);
    }
    return total / static_cast<double>(count);
}

FitHistory fit(ParameterStore& store, std::size_t train_count, std::size_t val_count,
               const BatchLoss& batch_loss, const FitOptions& options) {
    if (train_count == 0) throw Error(ErrorKind::EmptyDataset, "training window set is empty");
    if (val_count == 0) throw Error(ErrorKind::EmptyDataset, "validation window set is empty");
    if (options.batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch size must be positive");

    FitHistory history;
    Rng rng(options.seed);
    const AdamOptions adam{options.learning_rate};
    std::vector<std::size_t> order(train_count);
    std::iota(order.begin(), order.end(), 0);

    history.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best = store.snapshot();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(order[i - 1], order[j]);
        }
        const std::size_t used = options.max_train_windows > 0 ? std::min(options.max_train_windows, train_count)
                                                               : train_count;
        double train_total = 0.0;
        for (std::size_t start = 0; start < used; start += options.batch_size) {
            const std::size_t n = std::min(options.batch_size, used - start);
            store.zero_grad();
            Tape tape;
            Var loss = batch_loss(tape, std::span<const std::size_t>(order.data() + start, n), true, rng);
            const double lv = loss.value().item();
            if (!std::isfinite(lv)) {
                throw Error(ErrorKind::DivergedLoss, "non-finite training loss in epoch " + std::to_string(epoch + 1));
            }
            tape.backward(loss);
            adam_step(store, adam);
            train_total += lv * static_cast<double>(n);
        }
        const double val = evaluate_loss(val_count, options.batch_size, batch_loss);
        if (!std::isfinite(val)) {
            throw Error(ErrorKind::DivergedLoss, "non-finite validation loss in epoch " + std::to_string(epoch + 1));
        }
        history.epochs.push_back({epoch + 1, train_total / static_cast<double>(used), val});
        if (val < history.best_val_loss) {
            history.best_val_loss = val;
            history.best_epoch = epoch + 1;
            best = store.snapshot();
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= options.patience) {
            history.stopped_early = epoch + 1 < options.max_epochs;
            break;
        }
    }
    if (!history.epochs.empty()) store.restore(best);
    return history;
}

} // namespace windcast::nn
