// Runs assets/page-agent.js against a small stand-in DOM and checks the
// dispatch() contract the bridge relies on.
"use strict";
const assert = require("node:assert/strict");
const fs = require("node:fs");
const path = require("node:path");
const vm = require("node:vm");

const source = fs.readFileSync(path.join(__dirname, "../../assets/page-agent.js"), "utf8");

function makePage() {
  const scroll = { y: 0 };
  const attrs = new Map();
  const mk = (id, cls, y, pos, text, z = "auto") => ({
    id, tagName: "DIV", nodeType: 1, classList: cls ? [cls] : [], innerText: text,
    style: { position: pos, zIndex: z },
    top: y, parentElement: null, previousElementSibling: null,
    getBoundingClientRect() { return { left: 20, top: this.top - scroll.y, width: 300, height: 80 }; },
    setAttribute(k) { attrs.set(this.id, k); },
  });
  const els = [
    mk("intro", "", 0, "static", "Intro paragraph."),
    ...["a", "b", "c", "d", "e"].map((l, i) => mk("beat-" + l, "overlay", 600 + 800 * i, "absolute", "Box " + l + " text.")),
    mk("empty", "overlay-ghost", 100, "fixed", "   "),
    mk("layer", "", 300, "static", "Layered.", "3"),
  ];
  const head = [];
  function qsa(sel) {
    const out = [];
    for (const part of sel.split(",").map((s) => s.trim())) {
      if (part === "##") throw new Error("'##' is not a valid selector");
      for (const e of els) {
        const hit = part === "*" || (part[0] === "#" && e.id === part.slice(1)) || (part[0] === "." && e.classList.includes(part.slice(1)));
        if (hit && !out.includes(e)) out.push(e);
      }
    }
    return out;
  }
  const docEl = { scrollHeight: 5000, style: { setProperty() {} } };
  const window = {
    innerWidth: 540, innerHeight: 960, devicePixelRatio: 1,
    get scrollX() { return 0; },
    get scrollY() { return scroll.y; },
    scrollTo(o) { scroll.y = Math.max(0, Math.min(o.top, 5000 - 960)); },
  };
  const document = {
    documentElement: docEl,
    body: { style: { setProperty() {} }, querySelectorAll: qsa },
    head: { appendChild(n) { head.push(n); } },
    querySelectorAll: qsa,
    getElementById(id) { return head.find((n) => n.id === id) || null; },
    createElement() { return {}; },
  };
  const ctx = {
    window, document, location: { href: "file:///five_boxes.html" },
    CSS: { escape: (s) => s },
    getComputedStyle: (el) => el.style,
    requestAnimationFrame: (f) => setImmediate(f),
    scrollX: 0,
  };
  Object.defineProperty(ctx, "scrollY", { get: () => scroll.y });
  ctx.globalThis = ctx;
  vm.createContext(ctx);
  return { ctx, attrs, head, window };
}

async function main() {
  const page = makePage();
  const ns = "__s2rAgent_123456";
  vm.runInContext("(" + source + ")(" + JSON.stringify(ns) + ")", page.ctx);
  const agent = page.ctx[ns];
  assert.ok(agent && typeof agent.dispatch === "function");
  let id = 0;
  const call = async (method, params) => {
    const raw = await agent.dispatch(JSON.stringify({ id: ++id, method, params }));
    assert.equal(typeof raw, "string");
    const r = JSON.parse(raw);
    assert.equal(r.id, id);
    return r;
  };

  // Installing twice keeps the first instance.
  vm.runInContext("(" + source + ")(" + JSON.stringify(ns) + ")", page.ctx);
  assert.equal(page.ctx[ns], agent);

  const prep = await call("prepare", {});
  assert.deepEqual(prep.result, { max_scroll_px: 4040, document_height_px: 5000 });

  const s = (await call("survey", { selector: ".overlay" })).result;
  assert.equal(s.query, ".overlay");
  assert.deepEqual(s.elements.map((e) => e.selector), ["#beat-a", "#beat-b", "#beat-c", "#beat-d", "#beat-e"]);
  assert.deepEqual(s.elements[1].box, { x: 20, y: 1400, width: 300, height: 80 });
  assert.equal(s.elements[0].positioning, "absolute");
  assert.deepEqual(s.viewport, { width_px: 540, height_px: 960, device_scale: 1 });

  // Heuristic survey: positioned or layered boxes with text only.
  const h = (await call("survey", { selector: null })).result;
  assert.equal(h.query, null);
  assert.deepEqual(h.elements.map((e) => e.selector), ["#beat-a", "#beat-b", "#beat-c", "#beat-d", "#beat-e", "#layer"]);

  const bad = await call("survey", { selector: "##" });
  assert.equal(bad.ok, false);
  assert.match(bad.error, /not a valid selector/);

  assert.equal((await call("hide", { selectors: ["#beat-a", ".overlay"] })).result, 6);
  assert.equal((await call("hide", { selectors: [".overlay"] })).result, 5);
  assert.equal(page.head.length, 1);
  assert.equal(page.attrs.size, 5);

  assert.equal((await call("scrollTo", { y: 920 })).result, 920);
  assert.equal((await call("scrollTo", { y: 99999 })).result, 4040);
  // Boxes report document coordinates regardless of scroll.
  assert.equal((await call("survey", { selector: "#beat-c" })).result.elements[0].box.y, 2200);

  const unknown = await call("teleport", {});
  assert.deepEqual([unknown.ok, unknown.error], [false, "unknown method teleport"]);
  console.log("page agent: ok");
}

main().catch((e) => {
  console.error(e);
  process.exit(1);
});
