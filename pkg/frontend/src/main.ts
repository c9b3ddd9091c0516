import { AnnorigClient } from "./api.js";
import { createApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "";
  const labels = (params.get("labels") ?? "defect,scratch,dent").split(",");
  const app = createApp(root, new AnnorigClient(api), { labels });
  void app.start();
}
