#include "ife/model.hpp"

#include <cmath>

#include <json.hpp>

#include "ife/ops.hpp"
#include "ife/rng.hpp"

namespace ife {

namespace {
constexpr uint64_t kInitTag = 0x1f3a;

int pooled_extent(int extent, int kernel, int stride) { return (extent - kernel) / stride + 1; }
}  // namespace

void ModelConfig::validate() const {
  if (conv_layers.empty()) throw ValueError("model: no conv layers");
  if (in_channels < 1 || in_h < 1 || in_w < 1)
    throw ValueError("model: bad input shape " + std::to_string(in_channels) + "x" +
                     std::to_string(in_h) + "x" + std::to_string(in_w));
  int h = in_h, w = in_w;
  for (size_t i = 0; i < conv_layers.size(); ++i) {
    const ConvLayerCfg& l = conv_layers[i];
    if (l.kernel < 1 || l.stride < 1 || l.channels < 1)
      throw ValueError("model: conv layer " + std::to_string(i) + " has non-positive kernel/stride/channels");
    if (kind == FrontEnd::NonOverlap) {
      if (l.stride != l.kernel)
        throw ValueError("model: layer " + std::to_string(i) + " has stride " + std::to_string(l.stride) +
                         " != kernel " + std::to_string(l.kernel) + "; the interpretable front-end is non-overlapping");
      if (h % l.stride != 0 || w % l.stride != 0)
        throw ValueError("model: layer " + std::to_string(i) + " stride " + std::to_string(l.stride) +
                         " does not divide spatial dims " + std::to_string(h) + "x" + std::to_string(w));
    } else {
      if (l.stride >= l.kernel)
        throw ValueError("model: baseline layer " + std::to_string(i) +
                         " must overlap (stride < kernel), got stride " + std::to_string(l.stride) +
                         " kernel " + std::to_string(l.kernel));
    }
    if (l.kernel > h || l.kernel > w)
      throw ValueError("model: layer " + std::to_string(i) + " kernel exceeds spatial dims");
    h = pooled_extent(h, l.kernel, l.stride);
    w = pooled_extent(w, l.kernel, l.stride);
  }
  if (h < 2 || w < 2)
    throw ValueError("model: feature grid " + std::to_string(h) + "x" + std::to_string(w) +
                     " is below the 2x2 minimum");
  if (attention_dim < 1) throw ValueError("model: attention_dim must be positive");
  if (afe.residual_blocks < 1) throw ValueError("model: residual block count must be >= 1");
  if (afe.pool_kernel < 1 || afe.pool_stride < 1)
    throw ValueError("model: pool kernel and stride must be >= 1");
  if (afe.pool_kernel > h || afe.pool_kernel > w)
    throw ValueError("model: pool kernel " + std::to_string(afe.pool_kernel) +
                     " exceeds the feature grid " + std::to_string(h) + "x" + std::to_string(w));
  int ph = pooled_extent(h, afe.pool_kernel, afe.pool_stride);
  int pw = pooled_extent(w, afe.pool_kernel, afe.pool_stride);
  if (afe.out_h > ph || afe.out_w > pw)
    throw ValueError("model: adaptive output " + std::to_string(afe.out_h) + "x" +
                     std::to_string(afe.out_w) + " exceeds the pooled grid " + std::to_string(ph) +
                     "x" + std::to_string(pw));
  if (num_actions < 1) throw ValueError("model: num_actions must be positive");
}

int ModelConfig::feature_h() const {
  int h = in_h;
  for (const auto& l : conv_layers) h = pooled_extent(h, l.kernel, l.stride);
  return h;
}

int ModelConfig::feature_w() const {
  int w = in_w;
  for (const auto& l : conv_layers) w = pooled_extent(w, l.kernel, l.stride);
  return w;
}

int ModelConfig::feature_channels() const { return conv_layers.back().channels; }

int ModelConfig::embedding_dim() const {
  int c = afe.channels > 0 ? afe.channels : feature_channels();
  int ph = pooled_extent(feature_h(), afe.pool_kernel, afe.pool_stride);
  int pw = pooled_extent(feature_w(), afe.pool_kernel, afe.pool_stride);
  int oh = afe.out_h > 0 ? afe.out_h : ph;
  int ow = afe.out_w > 0 ? afe.out_w : pw;
  return c * oh * ow;
}

audit::ConvStackSpec ModelConfig::stack_spec() const {
  audit::ConvStackSpec s;
  s.input_w = in_w;
  s.input_h = in_h;
  for (const auto& l : conv_layers) s.layers.push_back({l.kernel, l.stride});
  return s;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == FrontEnd::NonOverlap ? "non_overlap" : "overlap_baseline";
  j["in_channels"] = in_channels;
  j["in_h"] = in_h;
  j["in_w"] = in_w;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : conv_layers)
    layers.push_back({{"kernel", l.kernel}, {"stride", l.stride}, {"channels", l.channels}});
  j["conv_layers"] = layers;
  j["attention_dim"] = attention_dim;
  j["afe"] = {{"pool_kernel", afe.pool_kernel},   {"pool_stride", afe.pool_stride},
              {"residual_blocks", afe.residual_blocks}, {"channels", afe.channels},
              {"out_h", afe.out_h},               {"out_w", afe.out_w}};
  j["head"] = head == HeadKind::DuelingQ ? "dueling_q" : "actor_critic";
  j["num_actions"] = num_actions;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "non_overlap")
    c.kind = FrontEnd::NonOverlap;
  else if (kind == "overlap_baseline")
    c.kind = FrontEnd::OverlapBaseline;
  else
    throw ValueError("model config: unknown kind '" + kind + "'");
  c.in_channels = j.at("in_channels").get<int>();
  c.in_h = j.at("in_h").get<int>();
  c.in_w = j.at("in_w").get<int>();
  c.conv_layers.clear();
  for (const auto& l : j.at("conv_layers"))
    c.conv_layers.push_back({l.at("kernel").get<int>(), l.at("stride").get<int>(), l.at("channels").get<int>()});
  c.attention_dim = j.at("attention_dim").get<int>();
  const auto& a = j.at("afe");
  c.afe = AfeCfg{a.at("pool_kernel").get<int>(), a.at("pool_stride").get<int>(),
                 a.at("residual_blocks").get<int>(), a.at("channels").get<int>(),
                 a.at("out_h").get<int>(),       a.at("out_w").get<int>()};
  std::string head = j.at("head").get<std::string>();
  if (head == "dueling_q")
    c.head = HeadKind::DuelingQ;
  else if (head == "actor_critic")
    c.head = HeadKind::ActorCritic;
  else
    throw ValueError("model config: unknown head '" + head + "'");
  c.num_actions = j.at("num_actions").get<int>();
  return c;
}

std::string ModelConfig::fingerprint() const {
  std::string s = to_json();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Tensor& ModelParams::at(const std::string& name) {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw ValueError("model params: no parameter named '" + name + "'");
}

const Tensor& ModelParams::at(const std::string& name) const {
  return const_cast<ModelParams*>(this)->at(name);
}

long ModelParams::count() const {
  long n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  m.params_.fingerprint = cfg.fingerprint();
  Rng rng = derive_rng(seed, kInitTag);

  auto push = [&m](const std::string& name, Tensor t) {
    m.params_.names.push_back(name);
    m.params_.tensors.push_back(std::move(t));
  };
  auto conv_param = [&rng](int cout, int cin, int k, double gain) {
    return orthogonal_param({cout, cin, k, k}, gain, rng);
  };
  const double relu_gain = std::sqrt(2.0);

  int cin = cfg.in_channels;
  for (size_t i = 0; i < cfg.conv_layers.size(); ++i) {
    const auto& l = cfg.conv_layers[i];
    push("enc.conv" + std::to_string(i) + ".w", conv_param(l.channels, cin, l.kernel, relu_gain));
    push("enc.conv" + std::to_string(i) + ".b", Tensor::param({l.channels}, std::vector<double>(l.channels, 0.0)));
    cin = l.channels;
  }

  int cf = cfg.feature_channels();
  push("att.w1", orthogonal_param({cfg.attention_dim, cf}, 1.0, rng));
  push("att.b1", Tensor::param({cfg.attention_dim}, std::vector<double>(cfg.attention_dim, 0.0)));
  push("att.w2", orthogonal_param({1, cfg.attention_dim}, 1.0, rng));
  push("att.b2", Tensor::param({1}, {0.0}));

  int ca = cfg.afe.channels > 0 ? cfg.afe.channels : cf;
  if (ca != cf) {
    push("afe.trans.w", conv_param(ca, cf, 3, relu_gain));
    push("afe.trans.b", Tensor::param({ca}, std::vector<double>(ca, 0.0)));
  }
  for (int b = 0; b < cfg.afe.residual_blocks; ++b) {
    for (int c = 0; c < 2; ++c) {
      std::string base = "afe.res" + std::to_string(b) + ".conv" + std::to_string(c);
      push(base + ".w", conv_param(ca, ca, 3, relu_gain));
      push(base + ".b", Tensor::param({ca}, std::vector<double>(ca, 0.0)));
    }
  }

  int d = cfg.embedding_dim();
  push("head.v.w", orthogonal_param({1, d}, 1.0, rng));
  push("head.v.b", Tensor::param({1}, {0.0}));
  std::string second = cfg.head == HeadKind::DuelingQ ? "head.a" : "head.pi";
  push(second + ".w", orthogonal_param({cfg.num_actions, d}, 1.0, rng));
  push(second + ".b", Tensor::param({cfg.num_actions}, std::vector<double>(cfg.num_actions, 0.0)));
  return m;
}

Tensor Model::attention_weights(const Tensor& z) const {
  Tensor h = ife::tanh(linear_rows(z, params_.at("att.w1"), params_.at("att.b1")));
  Tensor e = linear_rows(h, params_.at("att.w2"), params_.at("att.b2"));
  return softmax(flatten(e));
}

HueOutput Model::encode(const Tensor& obs) const {
  if (obs.shape().size() != 3 || obs.dim(0) != cfg_.in_channels || obs.dim(1) != cfg_.in_h ||
      obs.dim(2) != cfg_.in_w)
    throw ShapeError("encode: observation shape " + shape_str(obs.shape()) + " does not match config " +
                     std::to_string(cfg_.in_channels) + "x" + std::to_string(cfg_.in_h) + "x" +
                     std::to_string(cfg_.in_w));
  Tensor x = obs;
  for (size_t i = 0; i < cfg_.conv_layers.size(); ++i) {
    std::string base = "enc.conv" + std::to_string(i);
    x = relu(conv2d(x, params_.at(base + ".w"), params_.at(base + ".b"), cfg_.conv_layers[i].stride));
  }
  int fh = x.dim(1), fw = x.dim(2), cf = x.dim(0);
  Tensor z = spatial_flatten(x);
  Tensor alpha = attention_weights(z);
  Tensor masked = spatial_unflatten(scale_rows(z, alpha), cf, fh, fw);
  HueOutput out;
  out.features = x;
  out.masked = masked;
  out.mask = reshape(alpha, {fh, fw});
  return out;
}

Tensor Model::embed(const Tensor& masked) const {
  // Masked features arrive attenuated by the softmax (alpha ~ 1/L until the
  // mask concentrates). They are passed unscaled: recovering magnitude by
  // concentrating the mask is exactly the pressure that makes the attention
  // land on task-relevant cells.
  Tensor y = maxpool2d(masked, cfg_.afe.pool_kernel, cfg_.afe.pool_stride);
  int cf = cfg_.feature_channels();
  int ca = cfg_.afe.channels > 0 ? cfg_.afe.channels : cf;
  if (ca != cf)
    y = relu(conv2d(pad2d(y, 1), params_.at("afe.trans.w"), params_.at("afe.trans.b"), 1));
  for (int b = 0; b < cfg_.afe.residual_blocks; ++b) {
    std::string base = "afe.res" + std::to_string(b);
    Tensor h = relu(y);
    h = conv2d(pad2d(h, 1), params_.at(base + ".conv0.w"), params_.at(base + ".conv0.b"), 1);
    h = relu(h);
    h = conv2d(pad2d(h, 1), params_.at(base + ".conv1.w"), params_.at(base + ".conv1.b"), 1);
    y = add(y, h);
  }
  int oh = cfg_.afe.out_h > 0 ? cfg_.afe.out_h : y.dim(1);
  int ow = cfg_.afe.out_w > 0 ? cfg_.afe.out_w : y.dim(2);
  y = adaptive_maxpool(y, oh, ow);
  return flatten(y);
}

Tensor Model::q_values(const Tensor& embedding) const {
  Tensor v = linear(embedding, params_.at("head.v.w"), params_.at("head.v.b"));
  Tensor a = linear(embedding, params_.at("head.a.w"), params_.at("head.a.b"));
  return add_broadcast(sub_broadcast(a, mean(a)), v);
}

Model::PolicyValue Model::policy_value(const Tensor& embedding) const {
  PolicyValue pv;
  pv.logits = linear(embedding, params_.at("head.pi.w"), params_.at("head.pi.b"));
  pv.value = linear(embedding, params_.at("head.v.w"), params_.at("head.v.b"));
  return pv;
}

Model::QOut Model::forward_q(const Tensor& obs) const {
  HueOutput h = encode(obs);
  Tensor emb = embed(h.masked);
  return QOut{q_values(emb), h.mask};
}

Model::AcOut Model::forward_ac(const Tensor& obs) const {
  HueOutput h = encode(obs);
  Tensor emb = embed(h.masked);
  PolicyValue pv = policy_value(emb);
  return AcOut{pv.logits, pv.value, h.mask};
}

Model Model::clone() const {
  Model m;
  m.cfg_ = cfg_;
  m.params_.fingerprint = params_.fingerprint;
  m.params_.names = params_.names;
  for (const Tensor& t : params_.tensors) m.params_.tensors.push_back(t.clone());
  return m;
}

void Model::copy_params_from(const Model& other) {
  if (other.params_.tensors.size() != params_.tensors.size())
    throw ValueError("copy_params_from: parameter lists differ");
  for (size_t i = 0; i < params_.tensors.size(); ++i)
    params_.tensors[i].values() = other.params_.tensors[i].values();
}

void Model::zero_grads() {
  for (Tensor& t : params_.tensors) t.zero_grad();
}

double mask_entropy(const Tensor& mask) {
  double h = 0.0;
  for (double a : mask.values())
    if (a > 0.0) h -= a * std::log(a);
  return h;
}

}  // namespace ife
