// Page-side agent. Installed once per page as globalThis[ns]; every call is
// dispatch(<AgentCall JSON>) -> JSON string {id, ok, result | error}.
(function (ns) {
  "use strict";
  if (globalThis[ns]) return;

  var STYLE_ID = ns + "-style";
  var MARK = "data-s2r-hidden";

  function uniqueSelector(el) {
    if (el.id && document.querySelectorAll("#" + CSS.escape(el.id)).length === 1) return "#" + CSS.escape(el.id);
    var parts = [];
    for (var node = el; node && node.nodeType === 1 && node !== document.documentElement; node = node.parentElement) {
      var tag = node.tagName.toLowerCase();
      var idx = 1;
      for (var sib = node.previousElementSibling; sib; sib = sib.previousElementSibling)
        if (sib.tagName === node.tagName) idx++;
      parts.unshift(tag + ":nth-of-type(" + idx + ")");
    }
    return "html > " + parts.join(" > ");
  }

  function positioning(style) {
    var p = style.position;
    return ["static", "relative", "absolute", "fixed", "sticky"].indexOf(p) >= 0 ? p : "static";
  }

  function describe(el) {
    var r = el.getBoundingClientRect();
    var style = getComputedStyle(el);
    var z = parseInt(style.zIndex, 10);
    return {
      selector: uniqueSelector(el),
      tag: el.tagName.toLowerCase(),
      classes: Array.prototype.slice.call(el.classList),
      text: (el.innerText || el.textContent || "").replace(/\s+/g, " ").trim(),
      box: { x: r.left + window.scrollX, y: r.top + window.scrollY, width: r.width, height: r.height },
      positioning: positioning(style),
      z_layer: isNaN(z) ? 0 : z
    };
  }

  function isCandidate(d) {
    if (!d.text) return false;
    if (d.box.width > window.innerWidth) return false;
    return d.positioning === "absolute" || d.positioning === "fixed" || d.positioning === "sticky" || d.z_layer > 0;
  }

  function survey(params) {
    var sel = params.selector;
    var nodes = sel == null ? document.body.querySelectorAll("*") : document.querySelectorAll(sel);
    var elements = [];
    for (var i = 0; i < nodes.length; i++) {
      var d = describe(nodes[i]);
      if (sel == null && !isCandidate(d)) continue;
      elements.push(d);
    }
    return {
      page: location.href,
      viewport: { width_px: window.innerWidth, height_px: window.innerHeight, device_scale: window.devicePixelRatio },
      document_height_px: document.documentElement.scrollHeight,
      query: sel == null ? null : sel,
      elements: elements
    };
  }

  function hide(params) {
    var count = 0;
    (params.selectors || []).forEach(function (sel) {
      document.querySelectorAll(sel).forEach(function (el) {
        el.setAttribute(MARK, "");
        count++;
      });
    });
    if (!document.getElementById(STYLE_ID)) {
      var style = document.createElement("style");
      style.id = STYLE_ID;
      style.textContent = "[" + MARK + "] { visibility: hidden !important; }";
      document.head.appendChild(style);
    }
    return count;
  }

  function maxScroll() {
    return Math.max(0, document.documentElement.scrollHeight - window.innerHeight);
  }

  function prepare() {
    document.documentElement.style.setProperty("scroll-behavior", "auto", "important");
    if (document.body) document.body.style.setProperty("scroll-behavior", "auto", "important");
    return { max_scroll_px: maxScroll(), document_height_px: document.documentElement.scrollHeight };
  }

  function scrollTo(params) {
    window.scrollTo({ top: params.y, left: 0, behavior: "instant" });
    return new Promise(function (resolve) {
      requestAnimationFrame(function () {
        requestAnimationFrame(function () { resolve(window.scrollY); });
      });
    });
  }

  var methods = { survey: survey, hide: hide, prepare: prepare, scrollTo: scrollTo };

  globalThis[ns] = {
    dispatch: function (callJson) {
      var call = JSON.parse(callJson);
      function reply(ok, value) {
        var r = { id: call.id, ok: ok };
        if (ok) r.result = value; else r.error = String(value);
        return JSON.stringify(r);
      }
      var fn = methods[call.method];
      if (!fn) return reply(false, "unknown method " + call.method);
      try {
        var out = fn(call.params || {});
        if (out && typeof out.then === "function")
          return out.then(function (v) { return reply(true, v); }, function (e) { return reply(false, e && e.message || e); });
        return reply(true, out);
      } catch (e) {
        return reply(false, e && e.message || e);
      }
    }
  };
})
