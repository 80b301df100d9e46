#include "lfs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lfs/rng.hpp"

namespace lfs {

namespace {

void softmax_rows(Tensor& logits) {
    const std::size_t b = logits.dim(0), c = logits.dim(1);
    for (std::size_t i = 0; i < b; ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            logits.at(i, j) = std::exp(logits.at(i, j) - mx);
            sum += logits.at(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) logits.at(i, j) /= sum;
    }
}

// dL/dlogits from dL/dprobs through softmax: p_j (g_j - sum_i g_i p_i).
Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs) {
    const std::size_t b = probs.dim(0), c = probs.dim(1);
    Tensor dz = Tensor::matrix(b, c);
    for (std::size_t i = 0; i < b; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += dprobs.at(i, j) * probs.at(i, j);
        for (std::size_t j = 0; j < c; ++j)
            dz.at(i, j) = probs.at(i, j) * (dprobs.at(i, j) - dot);
    }
    return dz;
}

class MlpModel final : public SurrogateModel {
public:
    MlpModel(std::size_t in, std::size_t hidden, std::size_t classes,
             std::uint64_t init_seed)
        : in_(in), hid_(hidden), cls_(classes) {
        p_.resize(in_ * hid_ + hid_ + hid_ * cls_ + cls_);
        g_.resize(p_.size(), 0.0);
        RngStream rng(init_seed, 0x696e6974ULL);
        const double s1 = std::sqrt(1.0 / static_cast<double>(in_));
        const double s2 = std::sqrt(1.0 / static_cast<double>(hid_));
        for (std::size_t i = 0; i < in_ * hid_; ++i) p_[i] = s1 * rng.next_gaussian();
        for (std::size_t i = 0; i < hid_ * cls_; ++i)
            p_[w2_off() + i] = s2 * rng.next_gaussian();
    }

    Tensor forward(const Tensor& batch) override {
        x_ = batch;
        const std::size_t b = batch.dim(0);
        h_ = Tensor::matrix(b, hid_);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < hid_; ++j) {
                double z = p_[b1_off() + j];
                for (std::size_t k = 0; k < in_; ++k)
                    z += batch.at(i, k) * p_[k * hid_ + j];
                h_.at(i, j) = std::tanh(z);
            }
        Tensor logits = Tensor::matrix(b, cls_);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < cls_; ++j) {
                double z = p_[b2_off() + j];
                for (std::size_t k = 0; k < hid_; ++k)
                    z += h_.at(i, k) * p_[w2_off() + k * cls_ + j];
                logits.at(i, j) = z;
            }
        softmax_rows(logits);
        probs_ = logits;
        return probs_;
    }

    void backward(const Tensor& dprobs) override {
        const Tensor dz = softmax_backward(probs_, dprobs);
        const std::size_t b = dz.dim(0);
        Tensor dh = Tensor::matrix(b, hid_);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < cls_; ++j) {
                const double d = dz.at(i, j);
                g_[b2_off() + j] += d;
                for (std::size_t k = 0; k < hid_; ++k) {
                    g_[w2_off() + k * cls_ + j] += h_.at(i, k) * d;
                    dh.at(i, k) += p_[w2_off() + k * cls_ + j] * d;
                }
            }
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < hid_; ++j) {
                const double t = h_.at(i, j);
                const double da = dh.at(i, j) * (1.0 - t * t);
                g_[b1_off() + j] += da;
                for (std::size_t k = 0; k < in_; ++k)
                    g_[k * hid_ + j] += x_.at(i, k) * da;
            }
    }

    std::vector<double>& params() override { return p_; }
    const std::vector<double>& grads() const override { return g_; }
    void zero_grads() override { std::fill(g_.begin(), g_.end(), 0.0); }

private:
    std::size_t b1_off() const { return in_ * hid_; }
    std::size_t w2_off() const { return in_ * hid_ + hid_; }
    std::size_t b2_off() const { return w2_off() + hid_ * cls_; }

    std::size_t in_, hid_, cls_;
    std::vector<double> p_, g_;
    Tensor x_, h_, probs_;
};

// conv3x3(ch -> 8) relu, avgpool2, conv3x3(8 -> 16) relu, global avg pool,
// dense 16 -> classes.
class TinyConvnet final : public SurrogateModel {
public:
    TinyConvnet(std::size_t h, std::size_t w, std::size_t ch, std::size_t classes,
                std::uint64_t init_seed)
        : h_(h), w_(w), ch_(ch), cls_(classes), h2_((h + 1) / 2), w2_((w + 1) / 2) {
        p_.resize(n_params());
        g_.resize(p_.size(), 0.0);
        RngStream rng(init_seed, 0x696e6974ULL);
        const double s1 = std::sqrt(2.0 / (9.0 * static_cast<double>(ch_)));
        const double s2 = std::sqrt(2.0 / (9.0 * static_cast<double>(kC1)));
        const double s3 = std::sqrt(1.0 / static_cast<double>(kC2));
        for (std::size_t i = 0; i < 9 * ch_ * kC1; ++i) p_[i] = s1 * rng.next_gaussian();
        for (std::size_t i = 0; i < 9 * kC1 * kC2; ++i)
            p_[w2_off() + i] = s2 * rng.next_gaussian();
        for (std::size_t i = 0; i < kC2 * cls_; ++i)
            p_[wd_off() + i] = s3 * rng.next_gaussian();
    }

    Tensor forward(const Tensor& batch) override {
        x_ = batch;
        const std::size_t b = batch.dim(0);
        a1_ = Tensor({b, h_, w_, kC1});
        conv_forward(batch, a1_, p_.data(), p_.data() + b1_off(), ch_, kC1);
        relu_inplace(a1_);
        pool_ = Tensor({b, h2_, w2_, kC1});
        pool_forward(a1_, pool_);
        a2_ = Tensor({b, h2_, w2_, kC2});
        conv_forward(pool_, a2_, p_.data() + w2_off(), p_.data() + b2_off(), kC1, kC2);
        relu_inplace(a2_);
        feat_ = Tensor::matrix(b, kC2);
        const double inv = 1.0 / static_cast<double>(h2_ * w2_);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t c = 0; c < kC2; ++c) {
                double sum = 0.0;
                for (std::size_t y = 0; y < h2_; ++y)
                    for (std::size_t x = 0; x < w2_; ++x) sum += a2_.at(s, y, x, c);
                feat_.at(s, c) = sum * inv;
            }
        Tensor logits = Tensor::matrix(b, cls_);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t j = 0; j < cls_; ++j) {
                double z = p_[bd_off() + j];
                for (std::size_t k = 0; k < kC2; ++k)
                    z += feat_.at(s, k) * p_[wd_off() + k * cls_ + j];
                logits.at(s, j) = z;
            }
        softmax_rows(logits);
        probs_ = logits;
        return probs_;
    }

    void backward(const Tensor& dprobs) override {
        const Tensor dz = softmax_backward(probs_, dprobs);
        const std::size_t b = dz.dim(0);
        Tensor dfeat = Tensor::matrix(b, kC2);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t j = 0; j < cls_; ++j) {
                const double d = dz.at(s, j);
                g_[bd_off() + j] += d;
                for (std::size_t k = 0; k < kC2; ++k) {
                    g_[wd_off() + k * cls_ + j] += feat_.at(s, k) * d;
                    dfeat.at(s, k) += p_[wd_off() + k * cls_ + j] * d;
                }
            }
        Tensor da2(a2_.shape());
        const double inv = 1.0 / static_cast<double>(h2_ * w2_);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t y = 0; y < h2_; ++y)
                for (std::size_t x = 0; x < w2_; ++x)
                    for (std::size_t c = 0; c < kC2; ++c)
                        da2.at(s, y, x, c) =
                            a2_.at(s, y, x, c) > 0 ? dfeat.at(s, c) * inv : 0.0;
        Tensor dpool(pool_.shape());
        conv_backward(pool_, da2, dpool, p_.data() + w2_off(), g_.data() + w2_off(),
                      g_.data() + b2_off(), kC1, kC2);
        Tensor da1(a1_.shape());
        pool_backward(dpool, da1);
        for (std::size_t i = 0; i < da1.size(); ++i)
            if (a1_[i] <= 0) da1[i] = 0.0;
        Tensor dx(x_.shape());   // discarded; conv_backward fills weight grads
        conv_backward(x_, da1, dx, p_.data(), g_.data(), g_.data() + b1_off(),
                      ch_, kC1);
    }

    std::vector<double>& params() override { return p_; }
    const std::vector<double>& grads() const override { return g_; }
    void zero_grads() override { std::fill(g_.begin(), g_.end(), 0.0); }

private:
    static constexpr std::size_t kC1 = 8, kC2 = 16;

    std::size_t b1_off() const { return 9 * ch_ * kC1; }
    std::size_t w2_off() const { return b1_off() + kC1; }
    std::size_t b2_off() const { return w2_off() + 9 * kC1 * kC2; }
    std::size_t wd_off() const { return b2_off() + kC2; }
    std::size_t bd_off() const { return wd_off() + kC2 * cls_; }
    std::size_t n_params() const { return bd_off() + cls_; }

    // Same-padded 3x3 convolution. Weights laid out as [ky][kx][cin][cout].
    static void conv_forward(const Tensor& in, Tensor& out, const double* w,
                             const double* bias, std::size_t cin, std::size_t cout) {
        const std::size_t b = in.dim(0), h = in.dim(1), wd = in.dim(2);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < wd; ++x)
                    for (std::size_t co = 0; co < cout; ++co) {
                        double acc = bias[co];
                        for (int ky = -1; ky <= 1; ++ky)
                            for (int kx = -1; kx <= 1; ++kx) {
                                const long yy = static_cast<long>(y) + ky;
                                const long xx = static_cast<long>(x) + kx;
                                if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 ||
                                    xx >= static_cast<long>(wd))
                                    continue;
                                const std::size_t koff =
                                    ((static_cast<std::size_t>(ky + 1) * 3 +
                                      static_cast<std::size_t>(kx + 1)) * cin) * cout;
                                for (std::size_t ci = 0; ci < cin; ++ci)
                                    acc += in.at(s, static_cast<std::size_t>(yy),
                                                 static_cast<std::size_t>(xx), ci) *
                                           w[koff + ci * cout + co];
                            }
                        out.at(s, y, x, co) = acc;
                    }
    }

    static void conv_backward(const Tensor& in, const Tensor& dout, Tensor& din,
                              const double* w, double* gw, double* gb,
                              std::size_t cin, std::size_t cout) {
        const std::size_t b = in.dim(0), h = in.dim(1), wd = in.dim(2);
        std::fill(din.data(), din.data() + din.size(), 0.0);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < wd; ++x)
                    for (std::size_t co = 0; co < cout; ++co) {
                        const double d = dout.at(s, y, x, co);
                        if (d == 0.0) continue;
                        gb[co] += d;
                        for (int ky = -1; ky <= 1; ++ky)
                            for (int kx = -1; kx <= 1; ++kx) {
                                const long yy = static_cast<long>(y) + ky;
                                const long xx = static_cast<long>(x) + kx;
                                if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 ||
                                    xx >= static_cast<long>(wd))
                                    continue;
                                const std::size_t koff =
                                    ((static_cast<std::size_t>(ky + 1) * 3 +
                                      static_cast<std::size_t>(kx + 1)) * cin) * cout;
                                for (std::size_t ci = 0; ci < cin; ++ci) {
                                    const double v = in.at(s, static_cast<std::size_t>(yy),
                                                           static_cast<std::size_t>(xx), ci);
                                    gw[koff + ci * cout + co] += v * d;
                                    din.at(s, static_cast<std::size_t>(yy),
                                           static_cast<std::size_t>(xx), ci) +=
                                        w[koff + ci * cout + co] * d;
                                }
                            }
                    }
    }

    static void relu_inplace(Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] < 0) t[i] = 0.0;
    }

    // 2x2 average pooling with edge windows clipped.
    void pool_forward(const Tensor& in, Tensor& out) const {
        const std::size_t b = in.dim(0), c = in.dim(3);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t y = 0; y < h2_; ++y)
                for (std::size_t x = 0; x < w2_; ++x)
                    for (std::size_t k = 0; k < c; ++k) {
                        double sum = 0.0;
                        int cnt = 0;
                        for (std::size_t dy = 0; dy < 2; ++dy)
                            for (std::size_t dx = 0; dx < 2; ++dx) {
                                const std::size_t yy = 2 * y + dy, xx = 2 * x + dx;
                                if (yy >= h_ || xx >= w_) continue;
                                sum += in.at(s, yy, xx, k);
                                ++cnt;
                            }
                        out.at(s, y, x, k) = sum / cnt;
                    }
    }

    void pool_backward(const Tensor& dout, Tensor& din) const {
        const std::size_t b = dout.dim(0), c = dout.dim(3);
        std::fill(din.data(), din.data() + din.size(), 0.0);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t y = 0; y < h2_; ++y)
                for (std::size_t x = 0; x < w2_; ++x)
                    for (std::size_t k = 0; k < c; ++k) {
                        int cnt = 0;
                        for (std::size_t dy = 0; dy < 2; ++dy)
                            for (std::size_t dx = 0; dx < 2; ++dx)
                                if (2 * y + dy < h_ && 2 * x + dx < w_) ++cnt;
                        const double d = dout.at(s, y, x, k) / cnt;
                        for (std::size_t dy = 0; dy < 2; ++dy)
                            for (std::size_t dx = 0; dx < 2; ++dx) {
                                const std::size_t yy = 2 * y + dy, xx = 2 * x + dx;
                                if (yy >= h_ || xx >= w_) continue;
                                din.at(s, yy, xx, k) += d;
                            }
                    }
    }

    std::size_t h_, w_, ch_, cls_, h2_, w2_;
    std::vector<double> p_, g_;
    Tensor x_, a1_, pool_, a2_, feat_, probs_;
};

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

ModelKind model_from_name(const std::string& name) {
    if (name == "mlp") return ModelKind::Mlp;
    if (name == "tiny_convnet") return ModelKind::TinyConvnet;
    throw std::invalid_argument("unknown model kind: " + name);
}

std::string model_name(ModelKind kind) {
    return kind == ModelKind::Mlp ? "mlp" : "tiny_convnet";
}

std::unique_ptr<SurrogateModel> make_mlp(std::size_t input_dim, std::size_t hidden,
                                         std::size_t classes, std::uint64_t init_seed) {
    return std::make_unique<MlpModel>(input_dim, hidden, classes, init_seed);
}

std::unique_ptr<SurrogateModel> make_tiny_convnet(std::size_t height, std::size_t width,
                                                  std::size_t channels, std::size_t classes,
                                                  std::uint64_t init_seed) {
    return std::make_unique<TinyConvnet>(height, width, channels, classes, init_seed);
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
    if (step >= cfg.steps) return 0.0;
    if (step <= cfg.warmup_steps)
        return cfg.peak_lr * static_cast<double>(step) /
               static_cast<double>(cfg.warmup_steps);
    const double t = static_cast<double>(step - cfg.warmup_steps) /
                     static_cast<double>(cfg.steps - cfg.warmup_steps);
    return cfg.peak_lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

Tensor smooth_labels(const Tensor& labels, double alpha) {
    if (alpha <= 0.0) return labels;
    Tensor out = labels;
    const double c = static_cast<double>(labels.dim(1));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = out[i] * (1.0 - alpha) + alpha / c;
    return out;
}

double accuracy(const Tensor& probs, const Tensor& labels) {
    const std::size_t b = probs.dim(0), c = probs.dim(1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t pa = 0, la = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (probs.at(i, j) > probs.at(i, pa)) pa = j;
            if (labels.at(i, j) > labels.at(i, la)) la = j;
        }
        if (pa == la) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(b);
}

namespace {

struct Optimizer {
    OptimizerKind kind;
    double momentum, beta1, beta2;
    std::vector<double> m, v;
    std::size_t t = 0;

    explicit Optimizer(const TrainConfig& cfg, std::size_t n)
        : kind(cfg.optimizer), momentum(cfg.momentum), beta1(cfg.beta1),
          beta2(cfg.beta2), m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
        ++t;
        if (kind == OptimizerKind::Adam) {
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
            }
        } else {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = momentum * m[i] + g[i];
                p[i] -= lr * (g[i] + momentum * m[i]);
            }
        }
    }
};

double eval_val_accuracy(SurrogateModel& model, const Dataset& ds) {
    const Tensor feats = gather_features(ds, ds.val_idx);
    const Tensor labels = gather_labels(ds, ds.val_idx);
    return accuracy(model.forward(feats), labels);
}

} // namespace

FitnessRecord train_and_score(const LossGenome& genome, ModelKind model_kind,
                              std::size_t hidden, const Dataset& dataset,
                              AugmentId pipeline, const AugmentParams& aug_params,
                              const TrainConfig& cfg, std::uint64_t seed,
                              std::vector<double>* loss_trace) {
    FitnessRecord rec;
    rec.genome_hash = active_hash(genome);
    rec.augmentation = augment_name(pipeline);
    rec.seed = seed;

    // All randomness derives from (seed, genome hash) so concurrent callers
    // cannot perturb each other.
    const std::uint64_t base = seed ^ (rec.genome_hash * 0x9e3779b97f4a7c15ULL);
    std::unique_ptr<SurrogateModel> model;
    if (model_kind == ModelKind::Mlp) {
        if (dataset.is_image())
            throw std::invalid_argument("mlp model requires vector data");
        model = make_mlp(dataset.features.dim(1), hidden, dataset.classes, base);
    } else {
        if (!dataset.is_image())
            throw std::invalid_argument("tiny_convnet requires image data");
        model = make_tiny_convnet(dataset.features.dim(1), dataset.features.dim(2),
                                  dataset.features.dim(3), dataset.classes, base);
    }

    RngStream batch_rng(base, 0x6261746368ULL);   // "batch"
    const double chance = 1.0 / static_cast<double>(dataset.classes);
    const std::size_t check_step =
        cfg.early_stop_check_step > 0 ? cfg.early_stop_check_step : cfg.steps / 4;
    const double min_val_acc =
        cfg.early_stop_min_val_acc >= 0 ? cfg.early_stop_min_val_acc : chance + 0.05;

    Optimizer opt(cfg, model->params().size());
    double best_acc = 0.0;
    std::size_t best_step = 0;
    bool evaluated = false;

    auto record_eval = [&](std::size_t step) {
        const double acc = eval_val_accuracy(*model, dataset);
        if (!evaluated || acc > best_acc) {
            best_acc = acc;
            best_step = step;
        }
        evaluated = true;
        return acc;
    };

    std::vector<std::size_t> batch_idx(cfg.batch_size);
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        for (auto& i : batch_idx)
            i = dataset.train_idx[batch_rng.next_below(dataset.train_idx.size())];
        Batch batch{gather_features(dataset, batch_idx),
                    gather_labels(dataset, batch_idx)};
        if (dataset.is_image()) {
            std::uint64_t step_seed = base ^ (0xa0761d6478bd642fULL * step);
            batch = apply_pipeline(pipeline, batch, aug_params, step_seed);
        }
        const Tensor targets = smooth_labels(batch.labels, cfg.label_smoothing);

        const Tensor probs = model->forward(batch.images);
        Tensor dprobs;
        try {
            if (loss_trace)
                loss_trace->push_back(forward_reduced(genome, targets, probs));
            dprobs = backward(genome, targets, probs);
        } catch (const degenerate_loss_error&) {
            rec.degenerate = true;
            rec.best_val_acc = 0.0;
            rec.best_step = step;
            return rec;
        }
        model->zero_grads();
        model->backward(dprobs);
        opt.step(model->params(), model->grads(), lr_at(step, cfg));
        if (!all_finite(model->params())) {
            rec.degenerate = true;
            rec.best_val_acc = 0.0;
            rec.best_step = step;
            return rec;
        }

        if (step % cfg.eval_every == 0 || step == cfg.steps) record_eval(step);
        if (step == check_step) {
            const double acc = evaluated ? best_acc : record_eval(step);
            if (acc < min_val_acc) break;   // early stop, not degenerate
        }
    }
    if (!evaluated) record_eval(cfg.steps);
    rec.best_val_acc = best_acc;
    rec.best_step = best_step;
    return rec;
}

std::string fitness_csv_header() {
    return "genome_hash,augmentation,seed,best_val_acc,best_step,degenerate";
}

std::string fitness_csv_row(const FitnessRecord& r) {
    std::ostringstream os;
    os.precision(17);
    os << r.genome_hash << ',' << r.augmentation << ',' << r.seed << ','
       << r.best_val_acc << ',' << r.best_step << ',' << (r.degenerate ? 1 : 0);
    return os.str();
}

} // namespace lfs
