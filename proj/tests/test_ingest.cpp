#include "ctiforge/errors.hpp"
#include "ctiforge/ingest.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <random>
#include <thread>

using namespace ctiforge;
using testsupport::fixture;
using testsupport::read_file;

namespace {

template <typename F>
ErrorCode code_of(F f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

RawDocument doc(std::string type, std::string bytes) {
  RawDocument d;
  d.content_type = std::move(type);
  d.bytes = std::move(bytes);
  return d;
}

// httplib server on an ephemeral port, stopped on scope exit.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server &server() { return server_; }
  std::string url(const std::string &path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

IntelSource url_source(const std::string &u) { return {IntelSource::Kind::Url, u}; }

}  // namespace

TEST(HtmlToText, SpecExample) {
  EXPECT_EQ(html_to_text("<p>Uses <b>hxxp://evil[.]com</b></p>"), "Uses hxxp://evil[.]com");
}

TEST(HtmlToText, CampaignFixtureMatchesGolden) {
  EXPECT_EQ(html_to_text(read_file(fixture("campaign.html"))), read_file(fixture("campaign.expected.txt")));
}

TEST(HtmlToText, DropsBoilerplateSubtrees) {
  const std::string html =
      "<header>Site <b>menu</b></header><nav><a>Home</a></nav><script>var a = '<p>x</p>';</script>"
      "<style>p{}</style><p>Body</p><footer>(c) 2024</footer>";
  EXPECT_EQ(html_to_text(html), "Body");
}

TEST(HtmlToText, NestedDroppedElements) {
  EXPECT_EQ(html_to_text("<nav><nav>a</nav>b</nav><p>kept</p>"), "kept");
}

TEST(HtmlToText, BlockBoundariesBecomeSingleNewlines) {
  EXPECT_EQ(html_to_text("<div><p>one</p>\n\n<p>two</p></div><br>three"), "one\ntwo\nthree");
}

TEST(HtmlToText, TolerantOfMalformedMarkup) {
  EXPECT_EQ(html_to_text("<p>a < b and <i>c</p"), "a < b and c");
  EXPECT_EQ(html_to_text("<p unclosed=\"yes>text"), "");
  EXPECT_NO_THROW(html_to_text("<<<>>><!-- never closed"));
}

TEST(HtmlToText, CommentsRemoved) { EXPECT_EQ(html_to_text("a<!-- <p>hidden</p> -->b"), "ab"); }

TEST(Entities, NamedAndNumeric) {
  EXPECT_EQ(decode_entities("&amp;&lt;&gt;&quot;&apos;&nbsp;x"), "&<>\"' x");
  EXPECT_EQ(decode_entities("&#65;&#x42;&#X43;"), "ABC");
  EXPECT_EQ(decode_entities("&#xe9;"), "\xc3\xa9");
  EXPECT_EQ(decode_entities("&copy; &unknown; & done"), "&copy; &unknown; & done");
  EXPECT_EQ(decode_entities("&#0;"), "\xef\xbf\xbd");
  EXPECT_EQ(decode_entities("&#x110000;"), "\xef\xbf\xbd");
}

TEST(Entities, EscapedTagsDoNotSurviveAsTags) {
  const std::string out = html_to_text("<p>&lt;script&gt;alert(1)&lt;/script&gt;</p>");
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    EXPECT_FALSE(out[i] == '<' && std::isalpha(static_cast<unsigned char>(out[i + 1]))) << out;
  }
}

namespace {

std::string random_html(std::mt19937 &rng) {
  static const std::vector<std::string> parts = {
      "<p>",   "</p>",   "<div>",  "</div>",   "<b>",      "</b>",   "<script>", "</script>", "<style>", "</style>",
      "<nav>", "</nav>", "<br>",   "<!--",     "-->",      "&amp;",  "&lt;",     "&gt;",      "&#60;",   "&#x3c;",
      "text",  " word ", "\n",     "  ",       "<",        ">",      "a<b",      "&lt;div",   "<td>",    "</tr>",
      "T1566", "é",      "&nbsp;", "<a href=\"x\">", "</a>", "<h2>",   "</h2>",    "&#65;",     "x&lt;y",  "<?xml?>"};
  std::string s;
  const int n = std::uniform_int_distribution<int>(0, 40)(rng);
  for (int i = 0; i < n; ++i) s += parts[std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng)];
  return s;
}

}  // namespace

TEST(HtmlToTextProperty, NoSurvivingTagsAndIdempotent) {
  std::mt19937 rng(1234);
  for (int i = 0; i < 3000; ++i) {
    const std::string html = random_html(rng);
    const std::string out = extract_text(doc("text/html", html));
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
      ASSERT_FALSE(out[k] == '<' && std::isalpha(static_cast<unsigned char>(out[k + 1])))
          << "input: " << html << "\noutput: " << out;
    }
    ASSERT_EQ(extract_text(doc("text/plain", out)), out) << html;
  }
}

TEST(ExtractText, PlainAndMarkdownOnlyNormalizeWhitespace) {
  EXPECT_EQ(extract_text(doc("text/plain", "  a  b \n\n c ")), "a b\nc");
  EXPECT_EQ(extract_text(doc("text/markdown", "# Title\n\n<b>kept</b>")), "# Title\n<b>kept</b>");
}

TEST(ExtractText, UnsupportedTypes) {
  EXPECT_EQ(code_of([] { extract_text(doc("application/pdf", "%PDF-1.7")); }), ErrorCode::UnsupportedContentType);
  EXPECT_EQ(code_of([] { extract_text(doc("application/octet-stream", "\x01")); }),
            ErrorCode::UnsupportedContentType);
}

TEST(FetchSource, InlineIsPassthrough) {
  const RawDocument d = fetch_source({IntelSource::Kind::Inline, "APT used T1566."});
  EXPECT_EQ(d.content_type, "text/plain");
  EXPECT_EQ(d.bytes, "APT used T1566.");
}

TEST(FetchSource, FileTypesBySuffixAndSniffing) {
  const RawDocument html = fetch_source({IntelSource::Kind::File, fixture("campaign.html").string()});
  EXPECT_EQ(html.content_type, "text/html");
  EXPECT_EQ(html.bytes, read_file(fixture("campaign.html")));

  testsupport::TempDir dir;
  testsupport::write_file(dir / "noext", "<!DOCTYPE html><p>x</p>");
  EXPECT_EQ(fetch_source({IntelSource::Kind::File, (dir / "noext").string()}).content_type, "text/html");
  testsupport::write_file(dir / "doc", "%PDF-1.4 binary");
  EXPECT_EQ(fetch_source({IntelSource::Kind::File, (dir / "doc").string()}).content_type, "application/pdf");
  testsupport::write_file(dir / "notes.md", "# x");
  EXPECT_EQ(fetch_source({IntelSource::Kind::File, (dir / "notes.md").string()}).content_type, "text/markdown");
  testsupport::write_file(dir / "plain", "just words");
  EXPECT_EQ(fetch_source({IntelSource::Kind::File, (dir / "plain").string()}).content_type, "text/plain");
}

TEST(FetchSource, FileErrors) {
  testsupport::TempDir dir;
  EXPECT_EQ(code_of([&] { fetch_source({IntelSource::Kind::File, (dir / "missing.html").string()}); }),
            ErrorCode::FetchError);
  testsupport::write_file(dir / "big.txt", std::string(2048, 'a'));
  FetchLimits small;
  small.max_bytes = 1024;
  EXPECT_EQ(code_of([&] { fetch_source({IntelSource::Kind::File, (dir / "big.txt").string()}, small); }),
            ErrorCode::TooLarge);
}

TEST(FetchUrl, GetWithUserAgentAndMimeType) {
  LocalServer srv;
  std::string seen_agent;
  srv.server().Get("/post", [&](const httplib::Request &req, httplib::Response &res) {
    seen_agent = req.get_header_value("User-Agent");
    res.set_content("<p>hello</p>", "text/html; charset=utf-8");
  });
  const RawDocument d = fetch_source(url_source(srv.url("/post")));
  EXPECT_EQ(d.bytes, "<p>hello</p>");
  EXPECT_EQ(d.content_type, "text/html");
  EXPECT_EQ(seen_agent, "cti-forge/0.1.0");
  EXPECT_EQ(extract_text(d), "hello");
}

TEST(FetchUrl, FollowsRedirectsUpToLimit) {
  LocalServer srv;
  srv.server().Get(R"(/hop/(\d+))", [&](const httplib::Request &req, httplib::Response &res) {
    const int n = std::stoi(req.matches[1]);
    if (n == 0) {
      res.set_content("arrived", "text/plain");
    } else {
      res.status = 302;
      res.set_header("Location", "/hop/" + std::to_string(n - 1));
    }
  });
  FetchLimits limits;
  limits.max_redirects = 3;
  EXPECT_EQ(fetch_source(url_source(srv.url("/hop/3")), limits).bytes, "arrived");
  EXPECT_EQ(code_of([&] { fetch_source(url_source(srv.url("/hop/4")), limits); }), ErrorCode::FetchError);
}

TEST(FetchUrl, HttpErrorStatus) {
  LocalServer srv;
  srv.server().Get("/gone", [](const httplib::Request &, httplib::Response &res) {
    res.status = 404;
    res.set_content("no", "text/plain");
  });
  EXPECT_EQ(code_of([&] { fetch_source(url_source(srv.url("/gone"))); }), ErrorCode::FetchError);
}

TEST(FetchUrl, BodyCap) {
  LocalServer srv;
  srv.server().Get("/big", [](const httplib::Request &, httplib::Response &res) {
    res.set_content(std::string(64 * 1024, 'x'), "text/plain");
  });
  FetchLimits limits;
  limits.max_bytes = 1024;
  EXPECT_EQ(code_of([&] { fetch_source(url_source(srv.url("/big")), limits); }), ErrorCode::TooLarge);
}

TEST(FetchUrl, SlowServerTimesOut) {
  LocalServer srv;
  srv.server().Get("/slow", [](const httplib::Request &, httplib::Response &res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2500));
    res.set_content("late", "text/plain");
  });
  FetchLimits limits;
  limits.timeout = std::chrono::seconds(1);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { fetch_source(url_source(srv.url("/slow")), limits); }), ErrorCode::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(2400));
}

TEST(FetchUrl, ClosedPortIsFetchError) {
  // Bind without listening, note the port, release it.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof addr), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  EXPECT_EQ(code_of([&] { fetch_source(url_source("http://127.0.0.1:" + std::to_string(port) + "/")); }),
            ErrorCode::FetchError);
}
