import { ApiClient } from "./api";
import { AppController } from "./controller";
import { buildUi } from "./view";

const api = new ApiClient("");
const ctl = new AppController(api);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
const ui = buildUi(root, ctl);
ctl.onChange(() => ui.sync());
ui.sync();
void ctl.loadCatalog();
