import { ApiClient } from "./api.js";
import { App } from "./app.js";

const base =
  new URLSearchParams(window.location.search).get("service") ??
  window.location.origin;
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
void new App(new ApiClient(base), root).start();
