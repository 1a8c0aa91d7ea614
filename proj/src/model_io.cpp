#include "deepcars/model_io.hpp"

#include "deepcars/metrics.hpp"

#include <fstream>
#include <sstream>

namespace deepcars {

std::string serialize_model(const MlpParams<double>& params, OptimizerKind optimizer) {
  params.check_shapes();
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelFormatVersion << '\n';
  out << "layer_dims";
  for (int d : params.layer_dims) out << ' ' << d;
  out << "\noptimizer " << optimizer_name(optimizer) << '\n';
  for (int k = 0; k < params.num_layers(); ++k) {
    const auto& w = params.weights[k];
    out << "weights " << k << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << format_real(w(i, j));
      out << '\n';
    }
    const auto& b = params.biases[k];
    out << "biases " << k << ' ' << b.size() << '\n';
    for (Eigen::Index i = 0; i < b.size(); ++i) out << (i ? " " : "") << format_real(b(i));
    out << '\n';
  }
  return out.str();
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::istringstream next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(std::string("unexpected end of model file, expected ") + what, line_ + 1);
    ++line_;
    return std::istringstream(line);
  }
  std::size_t line() const { return line_; }

  void expect_keyword(std::istringstream& ls, const std::string& keyword) {
    std::string tok;
    if (!(ls >> tok) || tok != keyword)
      throw ParseError("expected '" + keyword + "', found '" + tok + "'", line_);
  }
  template <typename T>
  T read(std::istringstream& ls, const char* what) {
    T v{};
    if (!(ls >> v)) throw ParseError(std::string("expected ") + what, line_);
    return v;
  }
  double read_real(std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) throw ParseError("row is too short", line_);
    try {
      return parse_real(tok);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_);
    }
  }
  void expect_end(std::istringstream& ls) {
    std::string tok;
    if (ls >> tok) throw ParseError("unexpected trailing token '" + tok + "'", line_);
  }

 private:
  std::istringstream in_;
  std::size_t line_ = 0;
};

}  // namespace

StoredModel deserialize_model(const std::string& text) {
  LineReader r(text);
  auto head = r.next("header");
  std::string magic;
  head >> magic;
  if (magic != kModelMagic) throw ParseError("not a deepcars model file", 1);
  const int version = r.read<int>(head, "format version");
  if (version != kModelFormatVersion)
    throw ParseError("model format version mismatch: file has version " + std::to_string(version) +
                         ", this build reads version " + std::to_string(kModelFormatVersion),
                     1);

  auto dims_line = r.next("layer_dims");
  r.expect_keyword(dims_line, "layer_dims");
  std::vector<int> dims;
  for (int d; dims_line >> d;) dims.push_back(d);
  if (!dims_line.eof()) throw ParseError("bad layer_dims entry", r.line());

  StoredModel model;
  try {
    model.params = MlpParams<double>::zeros(dims);
  } catch (const ShapeError& e) {
    throw ParseError(e.what(), r.line());
  }

  auto opt_line = r.next("optimizer");
  r.expect_keyword(opt_line, "optimizer");
  try {
    model.optimizer = parse_optimizer(r.read<std::string>(opt_line, "optimizer name"));
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), r.line());
  }

  for (int k = 0; k < model.params.num_layers(); ++k) {
    auto& w = model.params.weights[k];
    auto wl = r.next("weights block");
    r.expect_keyword(wl, "weights");
    if (r.read<int>(wl, "layer index") != k || r.read<Eigen::Index>(wl, "rows") != w.rows() ||
        r.read<Eigen::Index>(wl, "cols") != w.cols())
      throw ParseError("weights block header disagrees with layer_dims", r.line());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      auto row = r.next("weight row");
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = r.read_real(row);
      r.expect_end(row);
    }
    auto& b = model.params.biases[k];
    auto bl = r.next("biases block");
    r.expect_keyword(bl, "biases");
    if (r.read<int>(bl, "layer index") != k || r.read<Eigen::Index>(bl, "size") != b.size())
      throw ParseError("biases block header disagrees with layer_dims", r.line());
    auto row = r.next("bias row");
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.read_real(row);
    r.expect_end(row);
  }
  if (!model.params.all_finite()) throw ParseError("model contains non-finite parameters");
  return model;
}

void save_model(const MlpParams<double>& params, OptimizerKind optimizer,
                const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_model(params, optimizer);
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_model(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

bool is_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  return in && (in >> magic) && magic == kModelMagic;
}

}  // namespace deepcars
