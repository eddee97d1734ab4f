#include "orifeat/trajio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace orifeat::trajio {

namespace {

constexpr std::size_t kDoublesPerResidue = 9;
constexpr std::array<unsigned char, 4> kMpbMagic = {0x4D, 0x50, 0x42, 0x31};
constexpr std::size_t kMpbHeaderSize = 24;
constexpr std::uint32_t kMpbVersion = 1;
constexpr double kMinBondLength = 1e-6;

const char* atom_name(Atom a) {
  switch (a) {
    case Atom::N: return "N";
    case Atom::CA: return "CA";
    case Atom::C: return "C";
  }
  return "?";
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(const unsigned char* p) { return std::bit_cast<float>(read_u32_le(p)); }

void check_residue(const double* xyz, std::size_t frame, std::size_t residue) {
  for (std::size_t k = 0; k < kDoublesPerResidue; ++k) {
    if (!std::isfinite(xyz[k])) {
      throw DomainError("non-finite coordinate at frame " + std::to_string(frame) + ", residue " +
                        std::to_string(residue));
    }
  }
  const Vec3 n(xyz[0], xyz[1], xyz[2]);
  const Vec3 ca(xyz[3], xyz[4], xyz[5]);
  const Vec3 c(xyz[6], xyz[7], xyz[8]);
  if ((n - ca).norm() < kMinBondLength || (c - ca).norm() < kMinBondLength) {
    throw DegenerateGeometryError("degenerate N-CA or C-CA bond at frame " + std::to_string(frame) +
                                  ", residue " + std::to_string(residue));
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> frame_selection(std::size_t total, const LoadOptions& opts) {
  if (opts.stride < 1) throw DomainError("stride must be >= 1");
  std::size_t begin = 0, end = total;
  if (opts.range) {
    begin = opts.range->begin;
    end = opts.range->end;
    if (begin >= end || end > total) {
      throw DomainError("frame range [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") outside trajectory of " + std::to_string(total) + " frames");
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t t = begin; t < end; t += opts.stride) out.push_back(t);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Structure

Structure::Structure(std::vector<double> coords, std::vector<char> chain_ids, std::string source)
    : coords_(std::move(coords)), chain_ids_(std::move(chain_ids)), source_(std::move(source)) {
  if (coords_.size() != chain_ids_.size() * kDoublesPerResidue) {
    throw StructuralError("structure coordinate count does not match residue count");
  }
}

Vec3 Structure::atom(std::size_t residue, Atom a) const {
  const double* p = coords_.data() + residue * kDoublesPerResidue + 3 * static_cast<int>(a);
  return Vec3(p[0], p[1], p[2]);
}

void Structure::set_atom(std::size_t residue, Atom a, const Vec3& x) {
  double* p = coords_.data() + residue * kDoublesPerResidue + 3 * static_cast<int>(a);
  p[0] = x.x();
  p[1] = x.y();
  p[2] = x.z();
}

void Structure::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != residues())
    throw StructuralError("residue label count does not match residue count");
  labels_ = std::move(labels);
}

Points Structure::select(AtomSelection sel) const {
  const std::size_t r = residues();
  if (sel == AtomSelection::CA) {
    Points p(r, 3);
    for (std::size_t i = 0; i < r; ++i) p.row(i) = atom(i, Atom::CA).transpose();
    return p;
  }
  Points p(3 * r, 3);
  for (std::size_t i = 0; i < r; ++i)
    for (int a = 0; a < kAtomsPerResidue; ++a) p.row(3 * i + a) = atom(i, static_cast<Atom>(a)).transpose();
  return p;
}

std::vector<std::pair<char, std::vector<std::size_t>>> Structure::chains() const {
  std::vector<std::pair<char, std::vector<std::size_t>>> out;
  for (std::size_t i = 0; i < chain_ids_.size(); ++i) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& c) { return c.first == chain_ids_[i]; });
    if (it == out.end()) {
      out.push_back({chain_ids_[i], {i}});
    } else {
      it->second.push_back(i);
    }
  }
  return out;
}

Structure Structure::subset(std::span<const std::size_t> residues) const {
  std::vector<double> c;
  std::vector<char> ids;
  std::vector<std::string> labels;
  c.reserve(residues.size() * kDoublesPerResidue);
  for (std::size_t r : residues) {
    if (r >= this->residues()) throw DomainError("residue index out of range");
    c.insert(c.end(), coords_.begin() + r * kDoublesPerResidue, coords_.begin() + (r + 1) * kDoublesPerResidue);
    ids.push_back(chain_ids_[r]);
    if (!labels_.empty()) labels.push_back(labels_[r]);
  }
  Structure s(std::move(c), std::move(ids), source_);
  s.set_labels(std::move(labels));
  return s;
}

void Structure::validate() const {
  for (std::size_t r = 0; r < residues(); ++r) check_residue(coords_.data() + r * kDoublesPerResidue, 0, r);
}

// ---------------------------------------------------------------------------
// BackboneTrajectory

BackboneTrajectory::BackboneTrajectory(std::size_t frames, std::size_t residues, std::vector<double> coords,
                                       std::vector<char> chain_ids, std::optional<double> dt_hint)
    : frames_(frames), residues_(residues), coords_(std::move(coords)), chain_ids_(std::move(chain_ids)),
      dt_hint_(dt_hint) {
  if (coords_.size() != frames_ * residues_ * kDoublesPerResidue)
    throw StructuralError("trajectory coordinate count does not match T x R x 9");
  if (chain_ids_.size() != residues_) throw StructuralError("chain id count does not match residue count");
}

BackboneTrajectory BackboneTrajectory::from_frames(std::span<const Structure> frames, std::optional<double> dt_hint) {
  if (frames.empty()) return BackboneTrajectory(0, 0, {}, {}, dt_hint);
  const auto& ids = frames.front().chain_ids();
  std::vector<double> coords;
  coords.reserve(frames.size() * ids.size() * kDoublesPerResidue);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].chain_ids() != ids)
      throw StructuralError("frame " + std::to_string(t) + " topology differs from frame 0");
    coords.insert(coords.end(), frames[t].coords().begin(), frames[t].coords().end());
  }
  return BackboneTrajectory(frames.size(), ids.size(), std::move(coords), ids, dt_hint);
}

Vec3 BackboneTrajectory::atom(std::size_t frame, std::size_t residue, Atom a) const {
  const double* p =
      coords_.data() + (frame * residues_ + residue) * kDoublesPerResidue + 3 * static_cast<int>(a);
  return Vec3(p[0], p[1], p[2]);
}

Structure BackboneTrajectory::frame(std::size_t t) const {
  if (t >= frames_) throw DomainError("frame index out of range");
  const auto first = coords_.begin() + t * residues_ * kDoublesPerResidue;
  return Structure(std::vector<double>(first, first + residues_ * kDoublesPerResidue), chain_ids_);
}

void BackboneTrajectory::set_frame(std::size_t t, const Structure& s) {
  if (t >= frames_) throw DomainError("frame index out of range");
  require_same_topology(chain_ids_, s.chain_ids(), "set_frame");
  std::copy(s.coords().begin(), s.coords().end(), coords_.begin() + t * residues_ * kDoublesPerResidue);
}

BackboneTrajectory BackboneTrajectory::slice(std::size_t begin, std::size_t end, std::size_t stride) const {
  LoadOptions o;
  o.stride = stride;
  o.range = FrameRange{begin, end};
  const auto sel = frame_selection(frames_, o);
  return select_frames(sel);
}

BackboneTrajectory BackboneTrajectory::select_frames(std::span<const std::size_t> frames) const {
  const std::size_t block = residues_ * kDoublesPerResidue;
  std::vector<double> c;
  c.reserve(frames.size() * block);
  for (std::size_t t : frames) {
    if (t >= frames_) throw DomainError("frame index out of range");
    c.insert(c.end(), coords_.begin() + t * block, coords_.begin() + (t + 1) * block);
  }
  return BackboneTrajectory(frames.size(), residues_, std::move(c), chain_ids_, dt_hint_);
}

BackboneTrajectory BackboneTrajectory::select_residues(std::span<const std::size_t> residues) const {
  std::vector<double> c;
  c.reserve(frames_ * residues.size() * kDoublesPerResidue);
  std::vector<char> ids;
  for (std::size_t r : residues) {
    if (r >= residues_) throw DomainError("residue index out of range");
    ids.push_back(chain_ids_[r]);
  }
  for (std::size_t t = 0; t < frames_; ++t) {
    for (std::size_t r : residues) {
      const auto first = coords_.begin() + (t * residues_ + r) * kDoublesPerResidue;
      c.insert(c.end(), first, first + kDoublesPerResidue);
    }
  }
  return BackboneTrajectory(frames_, residues.size(), std::move(c), std::move(ids), dt_hint_);
}

void BackboneTrajectory::validate() const {
  for (std::size_t t = 0; t < frames_; ++t)
    for (std::size_t r = 0; r < residues_; ++r)
      check_residue(coords_.data() + (t * residues_ + r) * kDoublesPerResidue, t, r);
}

void require_same_topology(const std::vector<char>& a, const std::vector<char>& b, const char* what) {
  if (a.size() != b.size()) {
    throw StructuralError(std::string(what) + ": residue count mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a != b) throw StructuralError(std::string(what) + ": chain layout mismatch");
}

// ---------------------------------------------------------------------------
// MPB1

BackboneTrajectory read_mpb(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trajectory " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  std::array<unsigned char, kMpbHeaderSize> header{};
  if (file_size < kMpbHeaderSize) throw FormatError("truncated MPB1 header", file_size);
  in.read(reinterpret_cast<char*>(header.data()), kMpbHeaderSize);
  if (!std::equal(kMpbMagic.begin(), kMpbMagic.end(), header.begin())) throw FormatError("bad MPB1 magic", 0);
  const std::uint32_t version = read_u32_le(header.data() + 4);
  if (version != kMpbVersion) throw FormatError("unsupported MPB1 version " + std::to_string(version), 4);
  const std::uint64_t total = read_u32_le(header.data() + 8);
  const std::uint64_t residues = read_u32_le(header.data() + 12);
  if (header[16] != kAtomsPerResidue) throw FormatError("MPB1 atom_count must be 3", 16);
  if (residues == 0) throw FormatError("MPB1 residue count is zero", 12);

  const std::uint64_t frame_bytes = residues * kDoublesPerResidue * sizeof(float);
  const std::uint64_t payload_end = kMpbHeaderSize + total * frame_bytes;
  if (file_size < payload_end) throw FormatError("truncated MPB1 payload", file_size);

  std::vector<char> chain_ids(residues, 'A');
  if (file_size == payload_end + residues) {
    in.seekg(static_cast<std::streamoff>(payload_end));
    in.read(chain_ids.data(), static_cast<std::streamsize>(residues));
  } else if (file_size != payload_end) {
    throw FormatError("unexpected trailing bytes after MPB1 payload", payload_end);
  }

  const auto frames = frame_selection(total, opts);
  std::vector<double> coords(frames.size() * residues * kDoublesPerResidue);
  std::vector<unsigned char> buf(frame_bytes);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::uint64_t offset = kMpbHeaderSize + frames[k] * frame_bytes;
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes));
    if (!in) throw FormatError("short read in MPB1 payload", offset);
    double* dst = coords.data() + k * residues * kDoublesPerResidue;
    for (std::uint64_t i = 0; i < residues * kDoublesPerResidue; ++i) dst[i] = read_f32_le(buf.data() + 4 * i);
  }
  BackboneTrajectory traj(frames.size(), residues, std::move(coords), std::move(chain_ids), opts.dt_hint);
  traj.validate();
  return traj;
}

void write_mpb(const BackboneTrajectory& traj, const std::filesystem::path& path, bool with_chain_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(kMpbMagic.data()), 4);
  write_u32_le(out, kMpbVersion);
  write_u32_le(out, static_cast<std::uint32_t>(traj.frames()));
  write_u32_le(out, static_cast<std::uint32_t>(traj.residues()));
  const char tail[8] = {static_cast<char>(kAtomsPerResidue), 0, 0, 0, 0, 0, 0, 0};
  out.write(tail, 8);
  for (double x : traj.coords()) write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  if (with_chain_ids) out.write(traj.chain_ids().data(), static_cast<std::streamsize>(traj.residues()));
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

BackboneTrajectory read_csv(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory " + path.string());
  std::string line;
  std::uint64_t lineno = 1;
  if (!std::getline(in, line)) throw FormatError("empty CSV trajectory", 0);
  const std::string header = trim(line);
  const bool has_chain = header == "frame,residue,atom,x,y,z,chain";
  if (!has_chain && header != "frame,residue,atom,x,y,z")
    throw FormatError("CSV header must be frame,residue,atom,x,y,z", lineno);

  // frame -> residue -> 9 coordinates, with a bitmask of seen atoms.
  std::map<std::size_t, std::map<std::size_t, std::pair<std::array<double, 9>, int>>> rows;
  std::map<std::size_t, char> chain_of;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (f.size() != (has_chain ? 7u : 6u)) throw FormatError("wrong CSV column count", lineno);
    std::size_t frame, residue;
    double xyz[3];
    try {
      frame = std::stoull(f[0]);
      residue = std::stoull(f[1]);
      for (int k = 0; k < 3; ++k) xyz[k] = std::stod(f[3 + k]);
    } catch (const std::exception&) {
      throw FormatError("unparsable CSV value", lineno);
    }
    int a;
    if (f[2] == "N") a = 0;
    else if (f[2] == "CA") a = 1;
    else if (f[2] == "C") a = 2;
    else throw FormatError("atom must be N, CA or C", lineno);
    auto& slot = rows[frame][residue];
    if (slot.second & (1 << a)) throw StructuralError("duplicate atom record at CSV line " + std::to_string(lineno));
    slot.second |= 1 << a;
    for (int k = 0; k < 3; ++k) slot.first[3 * a + k] = xyz[k];
    if (has_chain) {
      const char c = f[6].empty() ? 'A' : f[6][0];
      auto [it, inserted] = chain_of.emplace(residue, c);
      if (!inserted && it->second != c) throw StructuralError("residue " + std::to_string(residue) + " changes chain");
    }
  }
  if (rows.empty()) throw FormatError("CSV trajectory has no records", lineno);

  const std::size_t total = rows.size();
  const std::size_t residues = rows.begin()->second.size();
  std::size_t expect_t = 0;
  for (const auto& [t, res] : rows) {
    if (t != expect_t++) throw StructuralError("CSV frames must be numbered 0..T-1 without gaps");
    if (res.size() != residues)
      throw StructuralError("frame " + std::to_string(t) + " has " + std::to_string(res.size()) +
                            " residues, frame 0 has " + std::to_string(residues));
    std::size_t expect_r = 0;
    for (const auto& [r, slot] : res) {
      if (r != expect_r++) throw StructuralError("CSV residues must be numbered 0..R-1 in every frame");
      if (slot.second != 0b111)
        throw StructuralError("frame " + std::to_string(t) + ", residue " + std::to_string(r) + " is missing atoms");
    }
  }

  const auto frames = frame_selection(total, opts);
  std::vector<double> coords;
  coords.reserve(frames.size() * residues * kDoublesPerResidue);
  for (std::size_t t : frames)
    for (const auto& [r, slot] : rows.at(t)) coords.insert(coords.end(), slot.first.begin(), slot.first.end());
  std::vector<char> ids(residues, 'A');
  for (const auto& [r, c] : chain_of) ids.at(r) = c;
  BackboneTrajectory traj(frames.size(), residues, std::move(coords), std::move(ids), opts.dt_hint);
  traj.validate();
  return traj;
}

void write_csv(const BackboneTrajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "frame,residue,atom,x,y,z,chain\n";
  char buf[160];
  for (std::size_t t = 0; t < traj.frames(); ++t) {
    for (std::size_t r = 0; r < traj.residues(); ++r) {
      for (int a = 0; a < kAtomsPerResidue; ++a) {
        const Vec3 x = traj.atom(t, r, static_cast<Atom>(a));
        std::snprintf(buf, sizeof buf, "%zu,%zu,%s,%.17g,%.17g,%.17g,%c\n", t, r, atom_name(static_cast<Atom>(a)),
                      x.x(), x.y(), x.z(), traj.chain_ids()[r]);
        out << buf;
      }
    }
  }
}

BackboneTrajectory load_trajectory(const std::filesystem::path& path, const LoadOptions& opts) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_csv(path, opts);
  return read_mpb(path, opts);
}

// ---------------------------------------------------------------------------
// PDB subset

ReferenceStructure parse_pdb(std::istream& in, const std::string& source) {
  struct Residue {
    std::string label;
    std::string name;
    char chain;
    std::array<double, 9> xyz{};
    int seen = 0;
  };
  std::vector<Residue> residues;
  std::map<std::string, std::size_t> index;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("ENDMDL", 0) == 0) break;
    if (line.rfind("ATOM  ", 0) != 0) continue;
    if (line.size() < 54) throw ParseError(source + ":" + std::to_string(lineno) + ": ATOM record shorter than 54 columns");
    const std::string name = trim(line.substr(12, 4));
    int a;
    if (name == "N") a = 0;
    else if (name == "CA") a = 1;
    else if (name == "C") a = 2;
    else continue;

    const char altloc = line[16];
    const char chain = line[21];
    const std::string resseq = trim(line.substr(22, 4));
    const char icode = line[26];
    const std::string label = std::string(1, chain == ' ' ? '_' : chain) + ":" + resseq + (icode == ' ' ? "" : std::string(1, icode));
    if (altloc != ' ' && altloc != 'A') {
      warn(source + ": residue " + label + " atom " + name + " altloc '" + std::string(1, altloc) + "' ignored");
      continue;
    }
    auto [it, inserted] = index.emplace(label, residues.size());
    if (inserted) residues.push_back({label, trim(line.substr(17, 3)), chain == ' ' ? 'A' : chain, {}, 0});
    Residue& res = residues[it->second];
    if (res.seen & (1 << a)) continue;  // first of blank/'A' altloc wins
    double xyz[3];
    try {
      for (int k = 0; k < 3; ++k) xyz[k] = std::stod(line.substr(30 + 8 * k, 8));
    } catch (const std::exception&) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": bad coordinate field");
    }
    for (int k = 0; k < 3; ++k) res.xyz[3 * a + k] = xyz[k];
    res.seen |= 1 << a;
  }
  if (residues.empty()) throw ParseError(source + ": no backbone ATOM records");

  std::vector<double> coords;
  std::vector<char> ids;
  std::vector<std::string> labels;
  for (const auto& r : residues) {
    if (r.seen != 0b111) {
      std::string missing;
      for (int a = 0; a < 3; ++a)
        if (!(r.seen & (1 << a))) missing += std::string(missing.empty() ? "" : ",") + atom_name(static_cast<Atom>(a));
      throw ParseError(source + ": residue " + r.label + " (" + r.name + ") missing backbone atom(s) " + missing);
    }
    coords.insert(coords.end(), r.xyz.begin(), r.xyz.end());
    ids.push_back(r.chain);
    labels.push_back(r.label);
  }
  Structure s(std::move(coords), std::move(ids), source);
  s.set_labels(std::move(labels));
  s.validate();
  return s;
}

ReferenceStructure parse_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open reference " + path.string());
  return parse_pdb(in, path.string());
}

void write_pdb(const Structure& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  static const char* names[3] = {" N  ", " CA ", " C  "};
  static const char* elements[3] = {"N", "C", "C"};
  char buf[128];
  int serial = 1;
  std::map<char, int> resseq;
  for (std::size_t r = 0; r < s.residues(); ++r) {
    const char chain = s.chain_ids()[r];
    const int seq = ++resseq[chain];
    for (int a = 0; a < 3; ++a) {
      const Vec3 x = s.atom(r, static_cast<Atom>(a));
      std::snprintf(buf, sizeof buf, "ATOM  %5d %4s %3s %c%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n",
                    serial++ % 100000, names[a], "GLY", chain, seq % 10000, x.x(), x.y(), x.z(), 1.0, 0.0,
                    elements[a]);
      out << buf;
    }
  }
  out << "END\n";
}

}  // namespace orifeat::trajio
