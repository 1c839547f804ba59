#include "glq/field_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "glq/errors.hpp"

namespace glq::io {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw CorruptArtifactError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string(), ExitCode::ConfigError);
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

homotopy::FiniteGroup load_group(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (!j.contains("order") || !j.contains("mul"))
    throw ValidationError("group file needs 'order' and 'mul'");
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
  return homotopy::FiniteGroup::from_table(j["order"].get<int>(),
                                           j["mul"].get<std::vector<int>>(), std::move(labels));
}

void save_group(const homotopy::FiniteGroup& group, const std::filesystem::path& path) {
  json j;
  j["order"] = group.order;
  j["mul"] = group.mul;
  j["labels"] = group.labels;
  write_json(path, j);
}

homotopy::FiniteGroup group_by_name_or_file(const std::string& spec) {
  if (spec == "q8") return homotopy::FiniteGroup::quaternion8();
  if (spec == "d4") return homotopy::FiniteGroup::dihedral(4);
  if (spec.size() >= 2 && spec[0] == 'z') {
    bool digits = true;
    for (std::size_t i = 1; i < spec.size(); ++i) digits = digits && std::isdigit(spec[i]);
    if (digits) return homotopy::FiniteGroup::cyclic(std::stoi(spec.substr(1)));
  }
  return load_group(spec);
}

homotopy::EminTable load_emin(const std::filesystem::path& path, std::string* group_ref) {
  const json j = read_json(path);
  if (!j.contains("values")) throw ValidationError("emin file needs 'values'");
  if (group_ref && j.contains("group_ref")) *group_ref = j["group_ref"].get<std::string>();
  homotopy::EminTable t;
  t.values = j["values"].get<std::vector<double>>();
  return t;
}

void save_emin(const homotopy::EminTable& table, const std::string& group_ref,
               const std::filesystem::path& path) {
  json j;
  j["group_ref"] = group_ref;
  j["values"] = table.values;
  write_json(path, j);
}

void save_norms(const homotopy::NormTable& table, const homotopy::ClassAlgebra& alg,
                const std::filesystem::path& path) {
  json j;
  json classes = json::array();
  for (int c = 0; c < alg.num_classes(); ++c) {
    json rec;
    rec["id"] = c;
    rec["label"] = alg.class_label(c);
    rec["members"] = alg.classes[c].members;
    rec["norm"] = table.norms[c];
    classes.push_back(rec);
  }
  j["classes"] = classes;
  j["gap"] = table.gap;
  write_json(path, j);
}

void save_loop(const loops::LoopSamples& loop, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "# manifold=" << loop.manifold.name() << " K=" << loop.K << " m=" << loop.m() << "\n";
  for (int k = 0; k < loop.K; ++k) {
    for (int q = 0; q < loop.m(); ++q) {
      if (q) os << ",";
      os << loop.point(k)[q];
    }
    os << "\n";
  }
  write_text(path, os.str());
}

loops::LoopSamples load_loop(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::string manifold_id;
  int K = 0, m = 0;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("manifold=", 0) == 0) manifold_id = tok.substr(9);
      else if (tok.rfind("K=", 0) == 0) K = std::stoi(tok.substr(2));
      else if (tok.rfind("m=", 0) == 0) m = std::stoi(tok.substr(2));
    }
  }
  if (manifold_id.empty() || K <= 0)
    throw CorruptArtifactError("loop CSV header malformed in " + path.string());
  loops::LoopSamples loop{manifolds::EmbeddedManifold::by_name(manifold_id), K, {}};
  if (m != 0 && m != loop.m())
    throw CorruptArtifactError("loop CSV component count does not match the manifold");
  loop.points.reserve(static_cast<std::size_t>(K) * loop.m());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) loop.points.push_back(std::stod(cell));
  }
  if (loop.points.size() != static_cast<std::size_t>(K) * loop.m())
    throw CorruptArtifactError("loop CSV row/column count mismatch in " + path.string());
  return loop;
}

namespace {

json bc_to_json(const gl::BCDescriptor& bc) {
  json j;
  j["pattern"] = bc.pattern;
  j["axis"] = bc.axis;
  j["degree"] = bc.degree;
  json pts = json::array();
  for (const auto& p : bc.sigma_points) pts.push_back({p[0], p[1], p[2]});
  j["sigma_points"] = pts;
  return j;
}

gl::BCDescriptor bc_from_json(const json& j) {
  gl::BCDescriptor bc;
  bc.pattern = j.value("pattern", "constant");
  bc.axis = j.value("axis", 2);
  bc.degree = j.value("degree", 0);
  if (j.contains("sigma_points"))
    for (const auto& p : j["sigma_points"])
      bc.sigma_points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  return bc;
}

}  // namespace

void save_field(const gl::GridField& field, const gl::BCDescriptor& bc,
                const std::filesystem::path& base_path) {
  const std::filesystem::path bin = base_path.string() + ".bin";
  const std::filesystem::path meta = base_path.string() + ".json";
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw Error("cannot write " + bin.string(), ExitCode::ConfigError);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  }
  json j;
  j["dim"] = field.domain.dim;
  j["counts"] = {field.domain.counts[0], field.domain.counts[1], field.domain.counts[2]};
  j["extent"] = {field.domain.extent[0], field.domain.extent[1], field.domain.extent[2]};
  j["h"] = field.domain.h;
  j["m"] = field.m;
  j["eps"] = field.eps;
  j["manifold"] = field.manifold().name();
  j["embedding_scale"] = field.manifold().embedding_scale();
  j["potential"] = field.potential.kind_name();
  j["cap_value"] = field.potential.cap_value();
  j["bc"] = bc_to_json(bc);
  j["data_file"] = bin.filename().string();
  j["byte_size"] = field.values.size() * sizeof(double);
  j["checksum_fnv1a64"] =
      fnv1a64(field.values.data(), field.values.size() * sizeof(double));
  write_json(meta, j);
}

gl::GridField load_field(const std::filesystem::path& base_path, gl::BCDescriptor* bc) {
  const std::filesystem::path meta = base_path.string() + ".json";
  const json j = read_json(meta);
  const int dim = j.at("dim").get<int>();
  std::array<int, 3> counts{};
  std::array<double, 3> extent{};
  for (int a = 0; a < 3; ++a) {
    counts[a] = j.at("counts")[a].get<int>();
    extent[a] = j.at("extent")[a].get<double>();
  }
  const auto domain = gl::Domain::box(dim, extent, counts);
  auto manifold = manifolds::EmbeddedManifold::by_name(j.at("manifold").get<std::string>());
  if (manifold.id() == manifolds::ManifoldId::ProjectiveRP2)
    manifold = manifolds::EmbeddedManifold::rp2_qtensor(j.value("embedding_scale",
        manifolds::EmbeddedManifold::kDefaultRP2Scale));
  const std::string pot_name = j.at("potential").get<std::string>();
  auto potential = pot_name == "canonical-dist2"
                       ? manifolds::Potential::canonical_dist2(manifold, j.value("cap_value", -1.0))
                       : manifolds::Potential::by_name(pot_name, manifold);
  gl::GridField field = gl::make_field(domain, potential, j.at("eps").get<double>());
  if (j.at("m").get<int>() != field.m)
    throw CorruptArtifactError("field header m does not match the manifold");

  const std::filesystem::path bin =
      base_path.parent_path() / j.at("data_file").get<std::string>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + bin.string());
  in.seekg(0, std::ios::end);
  const std::uint64_t size = static_cast<std::uint64_t>(in.tellg());
  if (size != j.at("byte_size").get<std::uint64_t>() ||
      size != field.values.size() * sizeof(double))
    throw CorruptArtifactError("field data size mismatch for " + bin.string());
  in.seekg(0);
  in.read(reinterpret_cast<char*>(field.values.data()), static_cast<std::streamsize>(size));
  if (!in) throw CorruptArtifactError("short read on " + bin.string());
  const std::uint64_t sum = fnv1a64(field.values.data(), size);
  if (sum != j.at("checksum_fnv1a64").get<std::uint64_t>())
    throw CorruptArtifactError("field checksum mismatch for " + bin.string());
  if (bc) *bc = bc_from_json(j.at("bc"));
  return field;
}

void save_trace(const std::vector<gl::TraceSample>& trace, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,energy,grad_sup_norm\n";
  for (const auto& t : trace)
    os << t.iteration << "," << t.energy << "," << t.grad_sup << "\n";
  write_text(path, os.str());
}

void save_profile_csv(const std::vector<double>& radii, const std::vector<double>& values,
                      const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "radius,value\n";
  for (std::size_t i = 0; i < radii.size(); ++i) os << radii[i] << "," << values[i] << "\n";
  write_text(path, os.str());
}

void save_cloud_csv(const analysis::SingularSetEstimate& est,
                    const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y,z,flag,cluster\n";
  for (std::size_t i = 0; i < est.points.size(); ++i) {
    const auto& p = est.points[i];
    os << p[0] << "," << p[1] << "," << p[2] << ",1," << est.cluster[i] << "\n";
  }
  write_text(path, os.str());
}

}  // namespace glq::io
