#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "proc3d/mesh_io.hpp"
#include "proc3d/service.hpp"
#include "support/generators.hpp"

using namespace proc3d;
namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::string src(const std::string& rel) { return std::string(PROC3D_SOURCE_DIR) + "/" + rel; }

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Graph parse_ok(std::string_view text) {
  auto r = parse_pcg(text);
  if (!r.ok()) throw std::runtime_error(format_diagnostic(r.diagnostics.at(0)));
  return std::move(*r.graph);
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("proc3d_service_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ServiceOptions replay_options(const fs::path& replay_dir = src("fixtures/llm"), const fs::path& data_dir = {}) {
  ServiceOptions o;
  o.llm.replay_dir = replay_dir;
  o.data_dir = data_dir;
  o.retriever = std::make_shared<const ExampleRetriever>(load_corpus_file(src("samples/corpus.jsonl")));
  o.examples = 20;
  return o;
}

std::string service_error_code(const std::function<void()>& f, int* status = nullptr, json* details = nullptr) {
  try {
    f();
  } catch (const ServiceError& e) {
    if (status) *status = e.status();
    if (details) *details = e.details();
    return e.code();
  }
  ADD_FAILURE() << "no ServiceError";
  return {};
}

json param_value(const SessionState& s, const std::string& name) {
  for (const auto& p : s.params)
    if (p["name"] == name) return p["value"];
  return nullptr;
}

/// Everything a client can observe about a session except the mesh pointer.
json observable(const SessionState& s) {
  json j = s.to_json();
  j["obj"] = export_obj(*s.mesh);
  return j;
}

}  // namespace

TEST(Service, CreateFromPcgStartsAtRevisionZero) {
  EditService svc;
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  EXPECT_EQ(s.revision, 0u);
  EXPECT_FALSE(s.session_id.empty());
  EXPECT_EQ(s.params.size(), 4u);
  EXPECT_EQ(param_value(s, "leg_height"), 2.0);
  EXPECT_TRUE(parse_pcg(s.pcg).ok());
  EXPECT_TRUE(testgen::bitwise_equal(*s.mesh, *evaluate(parse_ok(read(src("samples/table.pcg"))))));
  EXPECT_EQ(svc.session_ids(), std::vector<std::string>{s.session_id});
  EXPECT_EQ(observable(svc.get_state(s.session_id)), observable(s));
}

TEST(Service, CreateRejectsInvalidGraph) {
  EditService svc;
  int status = 0;
  json details;
  EXPECT_EQ(service_error_code([&] { svc.create_from_pcg("c = cube(\noutput = c\n"); }, &status, &details), "InvalidGraph");
  EXPECT_EQ(status, 422);
  ASSERT_TRUE(details.contains("diagnostics"));
  EXPECT_EQ(details["diagnostics"][0]["line"], 1);
  EXPECT_EQ(service_error_code([&] { svc.create_session(json{{"nothing", 1}}); }, &status), "BadRequest");
  EXPECT_EQ(status, 400);
  EXPECT_TRUE(svc.session_ids().empty());
}

TEST(Service, ReplayedGenerationBuildsOfficeChair) {
  EditService svc(replay_options());
  const SessionState s = svc.create_from_instruction("Generate an office chair with wheels");
  EXPECT_EQ(s.revision, 0u);
  Graph g = parse_ok(s.pcg);
  EXPECT_TRUE(validate(g).empty());
  EXPECT_TRUE(g.find_param("wheel_radius"));
  EXPECT_TRUE(g.find_param("has_armrest"));
  EXPECT_EQ(s.mesh->triangles.size(), 1032u);
}

TEST(Service, GenerationReplayMissCreatesNothing) {
  EditService svc(replay_options());
  int status = 0;
  json details;
  EXPECT_EQ(service_error_code([&] { svc.create_from_instruction("a teapot nobody recorded"); }, &status, &details),
            "ReplayMiss");
  EXPECT_EQ(status, 502);
  EXPECT_TRUE(details.contains("prompt_key"));
  EXPECT_TRUE(svc.session_ids().empty());
  EXPECT_EQ(service_error_code([&] { svc.create_from_instruction("   "); }), "ValidationError");
}

TEST(Service, GenerationGarbageReturnsRawResponse) {
  const fs::path replay = scratch("gen_garbage");
  ServiceOptions opts = replay_options(replay);
  const auto examples = opts.retriever->retrieve("a floating cloud", 20);
  record_response(replay, build_generation_prompt("a floating cloud", examples).text, "I only write poems.");
  EditService svc(opts);
  json details;
  EXPECT_EQ(service_error_code([&] { svc.create_from_instruction("a floating cloud"); }, nullptr, &details),
            "GenerationFailed");
  EXPECT_EQ(details["raw_response"], "I only write poems.");
  EXPECT_EQ(details["diagnostics"][0]["code"], "NoGraphFound");
  EXPECT_TRUE(svc.session_ids().empty());
  fs::remove_all(replay);
}

TEST(Service, RemoveTheArmsDropsArmrestGroup) {
  EditService svc(replay_options());
  const SessionState before = svc.create_from_pcg(read(src("samples/chair/chair.pcg")));
  const SessionState after = svc.apply_text_edit(before.session_id, "Remove the arms");
  EXPECT_EQ(after.revision, 1u);
  EXPECT_EQ(param_value(after, "has_armrest"), false);

  EvalSession check(parse_ok(after.pcg));
  std::size_t arm = 0;
  for (auto tag : after.mesh->part_tags) arm += check.tag_owner(tag).rfind("armrest", 0) == 0 ? 1 : 0;
  EXPECT_EQ(arm, 0u);
  EXPECT_EQ(after.mesh->triangles.size(), before.mesh->triangles.size() - 2 * 12);
  // Everything else carried over.
  EXPECT_EQ(param_value(after, "seat_scale_x"), param_value(before, "seat_scale_x"));
}

TEST(Service, FailedTextEditLeavesSessionUnchanged) {
  const fs::path replay = scratch("edit_garbage");
  EditService svc(replay_options(replay));
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  svc.apply_param(s.session_id, "leg_height", 3.0);
  const json before = observable(svc.get_state(s.session_id));
  const Graph g = parse_ok(s.pcg);

  record_response(replay, build_edit_prompt(g, "make it pretty").text, "Sorry, no idea.");
  json details;
  EXPECT_EQ(service_error_code([&] { svc.apply_text_edit(s.session_id, "make it pretty"); }, nullptr, &details),
            "NoGraphFound");
  EXPECT_EQ(details["raw_response"], "Sorry, no idea.");
  EXPECT_EQ(observable(svc.get_state(s.session_id)), before);

  record_response(replay, build_edit_prompt(g, "break it").text, "```pcg\nc = cube(\n```");
  EXPECT_EQ(service_error_code([&] { svc.apply_text_edit(s.session_id, "break it"); }), "InvalidGraph");
  record_response(replay, build_edit_prompt(g, "zero").text, "input r: float = 0.0\ns = sphere(r)\noutput = s\n");
  EXPECT_EQ(service_error_code([&] { svc.apply_text_edit(s.session_id, "zero"); }), "NumericError");
  EXPECT_EQ(service_error_code([&] { svc.apply_text_edit(s.session_id, "not recorded"); }), "ReplayMiss");
  EXPECT_EQ(service_error_code([&] { svc.apply_text_edit(s.session_id, ""); }), "ValidationError");
  EXPECT_EQ(observable(svc.get_state(s.session_id)), before);
  fs::remove_all(replay);
}

TEST(Service, DefaultOnlyTextEditEqualsParamEdit) {
  const fs::path replay = scratch("edit_default");
  EditService svc(replay_options(replay));
  const std::string table = read(src("samples/table.pcg"));
  const SessionState a = svc.create_from_pcg(table);
  const SessionState b = svc.create_from_pcg(table);
  Graph edited = parse_ok(table);
  for (auto& p : edited.params)
    if (p.name == "leg_height") p.default_value = Value(3.0);
  record_response(replay, build_edit_prompt(parse_ok(a.pcg), "taller legs").text, "```pcg\n" + print_pcg(edited) + "```\n");

  const SessionState via_text = svc.apply_text_edit(a.session_id, "taller legs");
  const SessionState via_param = svc.apply_param(b.session_id, "leg_height", 3.0);
  EXPECT_EQ(via_text.revision, via_param.revision);
  EXPECT_EQ(param_value(via_text, "leg_height"), param_value(via_param, "leg_height"));
  EXPECT_TRUE(testgen::bitwise_equal(*via_text.mesh, *via_param.mesh));
  fs::remove_all(replay);
}

TEST(Service, ParamErrorsAreAtomic) {
  EditService svc;
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  const json before = observable(s);
  int status = 0;
  EXPECT_EQ(service_error_code([&] { svc.apply_param(s.session_id, "leg_height", 99.0); }, &status), "RangeError");
  EXPECT_EQ(status, 422);
  EXPECT_EQ(service_error_code([&] { svc.apply_param(s.session_id, "leg_height", "tall"); }), "BindingTypeError");
  EXPECT_EQ(service_error_code([&] { svc.apply_param(s.session_id, "nope", 1.0); }), "UnknownParameter");
  // One bad value in a batch rejects the whole batch.
  EXPECT_EQ(service_error_code([&] { svc.apply_params(s.session_id, {{"leg_radius", 0.5}, {"leg_height", -4.0}}); }),
            "RangeError");
  EXPECT_EQ(service_error_code([&] { svc.apply_param("missing", "leg_height", 1.0); }, &status), "UnknownSession");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(observable(svc.get_state(s.session_id)), before);
}

TEST(Service, RevisionsIncrementByOne) {
  EditService svc;
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  EXPECT_EQ(svc.apply_param(s.session_id, "leg_height", 3.0).revision, 1u);
  EXPECT_EQ(svc.apply_params(s.session_id, {{"leg_radius", 0.5}, {"table_width", 3.0}}).revision, 2u);
  EXPECT_THROW(svc.apply_param(s.session_id, "leg_height", -1.0), ServiceError);
  EXPECT_EQ(svc.get_state(s.session_id).revision, 2u);
  EXPECT_EQ(svc.apply_param(s.session_id, "leg_height", 3.0).revision, 3u);  // same value still counts
}

TEST(Service, LegHeightDeltaChangesOnlyLegs) {
  EditService svc;
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  const Mesh before = *s.mesh;
  const Mesh after = *svc.apply_param(s.session_id, "leg_height", 3.0).mesh;
  EvalSession tags(parse_ok(s.pcg));
  ASSERT_EQ(before.triangles, after.triangles);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.triangles.size(); ++i) {
    const bool leg = tags.tag_owner(before.part_tags[i]) == "leg";
    for (auto v : before.triangles[i]) {
      const bool same = before.vertices[v] == after.vertices[v];
      if (!leg) EXPECT_TRUE(same);
      changed += same ? 0 : 1;
    }
  }
  EXPECT_GT(changed, 0u);
}

TEST(Service, ThousandDeltasMatchFreshEvaluation) {
  EditService svc;
  const std::string chair = read(src("samples/chair/chair.pcg"));
  const SessionState s = svc.create_from_pcg(chair);
  const Graph g = parse_ok(chair);
  testgen::Rng rng(1000);
  Bindings final_bindings;
  for (int i = 0; i < 1000; ++i) {
    const Bindings delta = testgen::random_delta(rng, g);
    json values = json::object();
    for (const auto& [name, v] : delta) {
      values[name] = v.type() == ValueType::Bool ? json(v.as_bool()) : v.type() == ValueType::Int ? json(v.as_int()) : json(v.as_float());
      final_bindings[name] = v;
    }
    svc.apply_params(s.session_id, values);
  }
  const SessionState end = svc.get_state(s.session_id);
  EXPECT_EQ(end.revision, 1000u);
  EXPECT_TRUE(testgen::bitwise_equal(*end.mesh, *evaluate(g, final_bindings)));
}

TEST(Service, PersistAndReload) {
  const fs::path data = scratch("persist");
  const fs::path replay = scratch("persist_replay");
  json table_state, chair_state;
  std::string table_id, chair_id;
  {
    EditService svc(replay_options(src("fixtures/llm"), data));
    auto t = svc.create_from_pcg(read(src("samples/table.pcg")));
    svc.apply_param(t.session_id, "leg_height", 4.0);
    svc.apply_params(t.session_id, {{"leg_radius", 0.3}});
    auto c = svc.create_from_pcg(read(src("samples/chair/chair.pcg")));
    svc.apply_text_edit(c.session_id, "Remove the arms");
    svc.apply_param(c.session_id, "seat_scale_x", 0.7);
    table_id = t.session_id;
    chair_id = c.session_id;
    table_state = observable(svc.get_state(table_id));
    chair_state = observable(svc.get_state(chair_id));
  }
  EditService reloaded(replay_options(replay, data));  // text edits replay from the log, not the model
  EXPECT_EQ(reloaded.load_sessions(), 2u);
  EXPECT_EQ(observable(reloaded.get_state(table_id)), table_state);
  EXPECT_EQ(observable(reloaded.get_state(chair_id)), chair_state);
  // Mutations continue the revision sequence and keep persisting.
  EXPECT_EQ(reloaded.apply_param(table_id, "leg_height", 1.0).revision, 3u);
  fs::remove_all(data);
  fs::remove_all(replay);
}

TEST(Service, EmptyAndCorruptStores) {
  const fs::path data = scratch("corrupt");
  {
    EditService empty(replay_options(src("fixtures/llm"), data));
    EXPECT_EQ(empty.load_sessions(), 0u);
  }
  std::string good_id, bad_id;
  {
    EditService svc(replay_options(src("fixtures/llm"), data));
    good_id = svc.create_from_pcg(read(src("samples/table.pcg"))).session_id;
    bad_id = svc.create_from_pcg(read(src("samples/table.pcg"))).session_id;
    svc.apply_param(bad_id, "leg_height", 3.0);
  }
  // Cut the second log mid-record.
  const fs::path bad_log = data / (bad_id + ".jsonl");
  const std::string text = read(bad_log);
  std::ofstream(bad_log, std::ios::binary | std::ios::trunc) << text.substr(0, text.size() - 7);
  std::ofstream(data / "zzzz.jsonl", std::ios::binary) << "{\"type\": \"param\"}\n";

  EditService reloaded(replay_options(src("fixtures/llm"), data));
  EXPECT_EQ(reloaded.load_sessions(), 1u);
  EXPECT_EQ(reloaded.session_ids(), std::vector<std::string>{good_id});
  fs::remove_all(data);
}

TEST(CarryOver, NameTypeAndUnchangedDefault) {
  Graph old_g = parse_ok("input a: float = 1.0 [0.0..5.0]\ninput b: int = 3\ninput c: float = 1.0\ninput d: float = 2.0\n"
                         "k = cube()\noutput = k\n");
  Graph new_g = parse_ok("input a: float = 1.0 [0.0..2.0]\ninput b: float = 3.0\ninput c: float = 9.0\n"
                         "input d: float = 2.0\ninput e: bool = true\nk = cube()\noutput = k\n");
  const Bindings cur{{"a", Value(4.0)}, {"b", Value(5)}, {"c", Value(2.0)}, {"d", Value(7.0)}};
  const Bindings out = carry_over_bindings(old_g, cur, new_g);
  EXPECT_FALSE(out.count("a"));  // outside the new range
  EXPECT_FALSE(out.count("b"));  // type changed
  EXPECT_FALSE(out.count("c"));  // default changed
  ASSERT_TRUE(out.count("d"));
  EXPECT_EQ(out.at("d"), Value(7.0));
  EXPECT_FALSE(out.count("e"));
}

TEST(Mailbox, LatestWinsAndCountsDrops) {
  Mailbox box;
  int notified = 0;
  box.set_notify([&] { ++notified; });
  for (std::uint64_t r = 1; r <= 5; ++r) {
    auto u = std::make_shared<MeshUpdate>();
    u->revision = r;
    box.put(u);
  }
  EXPECT_EQ(notified, 5);
  EXPECT_EQ(box.dropped(), 4u);
  auto latest = box.take();
  ASSERT_TRUE(latest);
  EXPECT_EQ(latest->revision, 5u);
  EXPECT_FALSE(box.take());
  EXPECT_FALSE(box.wait(10ms));
}

TEST(Mailbox, SubscribersReceiveLatestRevision) {
  EditService svc;
  const SessionState s = svc.create_from_pcg(read(src("samples/table.pcg")));
  auto fast = svc.subscribe(s.session_id);
  auto slow = svc.subscribe(s.session_id);
  std::uint64_t last_seen = 0;
  std::thread reader([&] {
    while (last_seen < 50)
      if (auto u = fast->wait(1000ms)) last_seen = u->revision;
      else break;
  });
  for (int i = 1; i <= 50; ++i) svc.apply_param(s.session_id, "leg_height", 1.0 + 0.01 * i);
  reader.join();
  EXPECT_EQ(last_seen, 50u);
  auto u = slow->take();
  ASSERT_TRUE(u);
  EXPECT_EQ(u->revision, 50u);
  EXPECT_EQ(u->control["revision"], 50);
  EXPECT_EQ(u->control["type"], "revision");
  const Mesh decoded = decode_mesh_frame(u->frame->data(), u->frame->size());
  EXPECT_EQ(decoded.triangles, svc.get_state(s.session_id).mesh->triangles);
  svc.unsubscribe(s.session_id, slow);
  svc.apply_param(s.session_id, "leg_height", 2.0);
  EXPECT_FALSE(slow->take());
  EXPECT_EQ(svc.current_update(s.session_id)->revision, 51u);
}

TEST(Mailbox, ConcurrentSessionsAreIndependent) {
  EditService svc;
  const std::string table = read(src("samples/table.pcg"));
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(svc.create_from_pcg(table).session_id);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < ids.size(); ++w)
    workers.emplace_back([&, w] {
      for (int i = 0; i < 100; ++i) svc.apply_param(ids[w], "leg_height", 1.0 + 0.01 * static_cast<double>(i + static_cast<int>(w)));
    });
  for (auto& t : workers) t.join();
  for (std::size_t w = 0; w < ids.size(); ++w) {
    const auto st = svc.get_state(ids[w]);
    EXPECT_EQ(st.revision, 100u);
    EXPECT_EQ(param_value(st, "leg_height"), 1.0 + 0.01 * static_cast<double>(99 + static_cast<int>(w)));
  }
}
